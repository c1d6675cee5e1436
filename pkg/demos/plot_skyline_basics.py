"""
Skylines with mixed preferences
===============================

Compute a skyline with the sort-filter pass and check it against the
all-pairs definition.
"""

import numpy as np

from skycache import Relation, brute_force_skyline, sfs_skyline

# %%
# Hotels described by (price, distance, rating).  Cheap and close is good,
# a high rating is good.
hotels = np.array([
    [120, 2.0, 4.5],
    [80, 5.0, 4.0],
    [200, 0.5, 4.8],
    [90, 5.5, 3.9],
    [150, 2.5, 4.2],
])
rel = Relation(hotels, prefs=("min", "min", "max"), names=("price", "dist", "rating"))

# %%
# The skyline over all three attributes keeps every hotel that no other
# hotel beats on all counts at once.
full = sfs_skyline(rel, [0, 1, 2])
print("skyline on price, dist, rating:", sorted(full))
assert full == brute_force_skyline(rel, [0, 1, 2])

# %%
# Dropping an attribute can only shrink the skyline.
print("skyline on price, dist:", sorted(sfs_skyline(rel, [0, 1])))
print("skyline on price:", sorted(sfs_skyline(rel, [0])))
