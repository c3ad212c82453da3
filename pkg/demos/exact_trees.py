"""
Exact computations on finite probability trees
==============================================

On a finite tree with rational probabilities every optimal-stopping quantity is
a finite backward recursion, so we can work in exact fractions.
"""

# %%
import io

from avseq import admissibilize_e, implied_alternative, read_tree, snell_doob

text = """id parent prob e
0 - . 1
1 0 1/2 8/5
2 0 1/2 1/5
"""
tree, cols = read_tree(io.StringIO(text))
e = cols["e"]

# %% The Snell envelope is the value of stopping optimally; its Doob
# decomposition splits it into a martingale minus a predictable compensator.
res = snell_doob(tree, e)
for v in range(tree.n_nodes):
    print(f"node {v}: e={e[v]}  L={res.L[v]}  M={res.M[v]}  A={res.A[v]}")
print("best stopping value:", res.value, "(<= 1 means the payload is safe)")

# %% The dominating exact martingale with mean 1, and the alternative under
# which it is a likelihood ratio.
M = admissibilize_e(tree, e)
alt = implied_alternative(tree, M)
print("admissible version:", [str(m) for m in M])
print("implied alternative probabilities:", [str(p) for p in alt.prob[1:]])
