"""
Growing the segment index
=========================

Replay a short scripted sequence and print the resulting DAG.  Shared
attribute sets become their own segments, stored once and linked under
every query that contains them.
"""

from skycache.cli import FIG2_SEQUENCE, replay_fig2

kinds, cache = replay_fig2()
for q, kind in zip(FIG2_SEQUENCE, kinds):
    print(sorted(q), kind.name)

# %%
# Each line lists a segment and its children; ``|r|`` is the residual the
# segment stores beyond what its children already hold.
print(cache.index.dump())
cache.index.check()
