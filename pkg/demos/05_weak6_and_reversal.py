"""
Periodic input on the octahedron, and time reversal
===================================================

With the periodic input 142356 the stationary FCFM buffer is periodic too.
Pairing arrivals from an even or an odd start gives two different stationary
matchings of the same sequence. Separately, reversing time in a perfectly
matched FCFM block after swapping every item for its partner's class gives
another FCFM block.
"""

# %%
from matchkit.chain import format_detailed, run_natural
from matchkit.coupling import exchange_and_reverse_check, stationary_matching_window
from matchkit.graph import octahedron, paw
from matchkit.input import generate, periodic_stream
from matchkit.policy import FCFM

g = octahedron()
events = generate(periodic_stream(g.parse_word("142356")), g, 24)
even, odd = stationary_matching_window(events, FCFM, g)
print("even buffers:", [g.format_word(even.buffers[t]) or "∅" for t in range(6)])
print("odd buffers: ", [g.format_word(odd.buffers[t]) or "∅" for t in range(6, 12)])
print("same matching?", even.pairs() == odd.pairs())

# %%
p = paw()
classes = p.parse_word("134231322142")
res = exchange_and_reverse_check(classes, run_natural((), classes, FCFM, p).record, p)
print(format_detailed(p, res.exchanged), res.passed)
