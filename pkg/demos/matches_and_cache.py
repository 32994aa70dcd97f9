"""
Matches and the payoff cache
============================

Strategies play 200-round matches. The simulation never replays matches;
it draws per-turn mean scores from a cache of sampled matches.
"""

from ipdmoran import MatchConfig, build_cache, builtin_roster, play_match
from ipdmoran.strategies import roster_by_name

roster = roster_by_name(builtin_roster())
tft, alt, rnd = roster["Tit For Tat"], roster["Alternator"], roster["Random"]

# Tit For Tat falls one step behind the Alternator and stays there.
res = play_match(tft, alt, MatchConfig(turns=200))
print("".join(x.name for x, _ in res.actions[:10]), res.means)

# With 5% noise each intended move is flipped with probability 0.05.
noisy = play_match(tft, tft.relabel("Tit For Tat copy"), MatchConfig(noise=0.05, seed=3))
print("mutual cooperation under noise:", noisy.means)

###############################################################################
# Deterministic pairs store one sample, stochastic pairs many.

cache = build_cache([tft, alt, rnd], samples=200)
print(cache.is_constant("Tit For Tat", "Alternator"), len(cache[("Random", "Tit For Tat")]))
print("mean payoffs Random vs Tit For Tat:", cache.mean("Random", "Tit For Tat"))
