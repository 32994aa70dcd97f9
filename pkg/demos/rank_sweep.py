"""
Ranking strategies across population sizes
==========================================

A sweep estimates fixation for every ordered pair of a roster, each
population size and the three starts (one invader, half and half, one
resident left). Ranking by mean fixation over all opponents, then comparing
rankings across sizes, shows how success depends on N.
"""

from ipdmoran import MatchConfig, builtin_roster, correlation_matrix, rank_all, sweep
from ipdmoran.strategies import roster_by_name

names = ["Cooperator", "Defector", "Tit For Tat", "Grudger", "Win-Stay Lose-Shift", "Collective Strategy"]
by_name = roster_by_name(builtin_roster())
roster = [by_name[n] for n in names]

# Deterministic roster, so this is quick even at 300 runs per cell.
result = sweep(roster, range(2, 9), reps=300, cfg=MatchConfig(), seed=1)
result.write("sweep.csv")

tables = rank_all(result, "invade")
for N in (2, 8):
    print(f"N={N}:", [name for name, _, _ in tables[N].entries])

# Rankings at two sizes are compared with Spearman's rank correlation.
sizes, rho = correlation_matrix(tables)
print("rank correlation N=2 vs N=8:", round(rho[0, -1], 3))

resist = rank_all(result, "resist")[8]
print("best resistor at N=8:", resist.entries[0][0])
