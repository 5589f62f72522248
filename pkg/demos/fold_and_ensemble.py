"""
Folding a hairpin and looking at its ensemble
=============================================

MFE structure, partition function, pair probabilities and a few
stochastic samples for one short sequence under the bundled toy
parameters. Writes ``pairs.png`` next to the working directory.
"""

# %%
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from boltzfold import base_pair_probabilities, boltzmann_ensemble, fold_mfe, partition_function

seq = "GGGAAACCCATTGCGAAAGCAAT"

# %%
# the optimum and the free energy of the whole ensemble
st, e = fold_mfe(seq)
z, g = partition_function(seq)
print(seq)
print(st.dotbracket, e)
print(f"Z = {z:.4g}, G = {g:.3f} kcal/mol")

# %%
# pair probabilities; the MFE pairs should carry most of the mass
bpp = base_pair_probabilities(seq)
for i, j in st.pairs:
    print(f"p({i},{j}) = {bpp.pair(i, j):.3f}")

fig, ax = plt.subplots(figsize=(4, 4))
ax.imshow(bpp.p_pair + bpp.p_pair.T, cmap="Greys", vmin=0, vmax=1)
ax.set_xlabel("j")
ax.set_ylabel("i")
fig.tight_layout()
fig.savefig("pairs.png", dpi=120)

# %%
# stochastic traceback; most frequent structures first
ens = boltzmann_ensemble(seq, n_samples=2000, seed=1)
for s, energy, freq in ens.entries[:5]:
    print(s.dotbracket, f"{energy:+.1f}", f"{freq:.3f}")

# unpaired probability from the matrix vs. from the samples
sampled = np.mean([[s.pair_table[k] == 0 for k in range(len(seq))] for s in ens.samples], axis=0)
print("max |unpaired(exact) - unpaired(sampled)| =", np.abs(bpp.p_unpaired - sampled).max().round(3))
