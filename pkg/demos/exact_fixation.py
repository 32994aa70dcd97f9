"""
Exact fixation in a two-type Moran process
==========================================

A pair of strategies that always play the same way against each other is a
2x2 game (a, b, c, d). The birth-death chain on the number of first-type
individuals has a closed-form absorption probability.
"""

import numpy as np

from ipdmoran import PairGame, exact_fixation, fixation_vector

# Defector (first type) against Cooperator with the usual payoffs:
# D vs D earns P=1, D vs C earns T=5, C vs D earns S=0, C vs C earns R=3.
game = PairGame(a=1, b=5, c=0, d=3)

# One defector among two cooperators takes over three times in four.
print("x_1 at N=3:", exact_fixation(1, 3, game))

# At N=2 a lone cooperator has zero fitness, so the defector always wins.
print("x_1 at N=2:", exact_fixation(1, 2, game))

###############################################################################
# The whole vector x_0..x_N is computed at once.

for N in (3, 7, 14):
    x = fixation_vector(N, game)
    print(N, np.round(x, 4))

###############################################################################
# A neutral pair drifts: x_i = i / N.

print(fixation_vector(5, PairGame(2, 2, 2, 2)))

# Scaling all payoffs leaves fitness-proportional selection unchanged.
print(np.allclose(fixation_vector(10, game), fixation_vector(10, game.scaled(7.0))))
