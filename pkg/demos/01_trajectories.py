"""
Natural and detailed chains on the paw
======================================

The paw has classes 1, 2, 3, 4 with edges 1-2, 2-3, 2-4 and 3-4. We feed it
the arrivals 1 3 4 2 3 1 3 2 2 1 4 under first come, first matched and print
the queue word W together with its backwards (B) and forwards (F) detailed
versions. A barred letter, written ``~c``, is an item already matched with an
item of class ``c``.
"""

# %%
from matchkit.chain import INCOMPLETE, detailed_trajectories, format_detailed
from matchkit.graph import paw

g = paw()
traj = detailed_trajectories(g.parse_word("13423132214"), g)

# %%
# Forward words need partners that arrive later, so the last ones are unknown.
print(f"{'n':>2}  {'arrival':7}  {'W':6}  {'B':10}  F")
for n in range(1, len(traj) + 1):
    f = traj.forwards[n]
    f_txt = f if f == INCOMPLETE else format_detailed(g, f) or "∅"
    print(f"{n:>2}  {g.name(traj.classes[n - 1]):7}  {g.format_word(traj.words[n]) or '∅':6}  "
          f"{format_detailed(g, traj.backwards[n]) or '∅':10}  {f_txt}")

# %%
# The matching itself, as 1-based arrival numbers.
print(sorted((i + 1, j + 1) for i, j in traj.record.pairs))
