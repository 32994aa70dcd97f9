"""
Simulated versus exact fixation
===============================

For deterministic pairs the sampled Moran process and the exact chain of the
mean-payoff game are the same chain, so estimates agree within sampling
error. For pairs involving Random the exact chain only uses mean payoffs.
"""

from ipdmoran import MatchConfig, builtin_roster, validation_report
from ipdmoran.strategies import roster_by_name

roster = roster_by_name(builtin_roster())
pairs = [
    (roster["Defector"], roster["Cooperator"]),
    (roster["Win-Stay Lose-Shift"], roster["Tit For Tat"]),
    (roster["Random"], roster["Defector"]),
]

rows = validation_report(pairs, [3, 7], reps=1000, cfg=MatchConfig(), samples=200)
for r in rows:
    print(f"{r.name_a:>20} vs {r.name_b:<12} N={r.N:2d} i={r.i}: "
          f"sim {r.simulated:.3f} +- {r.ci95:.3f}  exact {r.exact:.3f}  z {r.z:+.2f}")

###############################################################################
# The plot needs matplotlib (``pip install .[plot]``).

try:
    from ipdmoran.plotting import plot_validation
except ImportError:
    pass
else:
    print(plot_validation(rows, "validation.svg"))
