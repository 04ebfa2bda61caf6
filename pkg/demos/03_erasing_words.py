"""
Erasing words
=============

An erasing word z of u is an even input that empties the buffer both from
scratch and after u. Strong erasing words do so for every admissible
two-letter start and leave every even suffix perfectly matchable; they are
what makes backwards coupling work.
"""

# %%
from matchkit.erasing import erasing_word, minimal_erasing_word, strong_erasing_word
from matchkit.graph import octahedron, paw
from matchkit.policy import FCFM, LCFM, UNIFORM

g = paw()
for target in ["13", "1133", "2222"]:
    cert = erasing_word(g, g.parse_word(target))
    print(f"u = {target:5} z = {g.format_word(cert.word):16} ({cert.verified_over})")

# %%
# Exhaustive search gives the shortest word.
print("shortest for 22:", g.format_word(minimal_erasing_word(g, g.parse_word("22")).word))

# %%
# Under uniform random preferences every reachable buffer is tracked.
cert = erasing_word(g, g.parse_word("1313"), UNIFORM)
print("uniform:", g.format_word(cert.word), cert.verified_over)

# %%
# The octahedron splits into three independent pairs; one letter from each
# neighbouring pair gives a six-letter strong word.
w6 = octahedron()
print("octahedron, FCFM:", w6.format_word(strong_erasing_word(w6, FCFM).word))
print("paw, LCFM:", g.format_word(strong_erasing_word(g, LCFM).word))
