"""Score the bundled case-study criteria table and check ranking stability.

Prints computed scores next to the published ones, then re-ranks with one
criterion group weighted double at a time.
"""

import csv
from pathlib import Path

import tees
from tees.mcda import normalize, rank_stability, ranking, read_matrix_csv, score

DATA = Path(tees.__file__).parent / "data"

GROUPS = {
    "technical": ("iuf", "resource_adequacy_pct", "infra_cost"),
    "economic": ("retail_rate", "cea_level", "annual_elec_cost_per_house",
                 "annual_heat_cost_per_house", "total_energy_cost_per_house"),
    "environmental": ("co2e_total_t", "pm25_ugm3"),
    "social": ("energy_burden_pct", "epi_pct"),
}

if __name__ == "__main__":
    m = read_matrix_csv(DATA / "case_study_criteria.csv")
    with open(DATA / "case_study_scores.csv", newline="") as fh:
        printed = {r["pathway"]: float(r["score"]) for r in csv.DictReader(fh)}
    s = score(normalize(m))
    print("pathway  computed  published  diff")
    for name in ranking(s, m.pathways):
        v = s[m.pathways.index(name)]
        print(f"{name:7s}  {v:8.3f}  {printed[name]:9.2f}  {v - printed[name]:+.3f}")
    weight_sets = [{c: (2.0 if c in cols else 1.0) for c in m.names} for cols in GROUPS.values()]
    rep = rank_stability(m, weight_sets)
    print("\nbase ranking:", " > ".join(rep.base_ranking))
    for group, r, top, order in zip(GROUPS, rep.rankings, rep.top_changed, rep.order_changed):
        flag = "top changed" if top else ("order changed" if order else "unchanged")
        print(f"{group:13s} x2: {' > '.join(r)}  ({flag})")
