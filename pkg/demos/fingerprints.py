"""
Motif fingerprints of structure ensembles
=========================================

Bag-of-faces and rooted-neighbourhood counts for a single structure, then
their expectations over a Boltzmann ensemble, stacked into one matrix with
a 4-mer block.
"""

# %%
from boltzfold import SecondaryStructure, boltzmann_ensemble, build_graph, motzkin_path
from boltzfold.fingerprint import FACE, NEIGHBORHOOD, assemble_matrix, bag_of_faces, bag_of_neighborhoods, \
    build_dictionary, epsilon_neighborhood, kmer_dictionary

seq = "GGGAAACCC"
st = SecondaryStructure.from_dotbracket("(((...)))")
g = build_graph(seq, st)

# %%
# one face per base pair, keyed by type and energy
print(bag_of_faces(g).as_dict())
# radius-1 balls; mirror positions of the stem collapse onto one key
print(bag_of_neighborhoods(g, radius=1).as_dict())
print("motzkin:", motzkin_path(st))

# %%
# expectations over exhaustive ensembles of a tiny corpus
corpus = [(s, boltzmann_ensemble(s, mode="exhaustive")) for s in
          ["GGGAAACCC", "GCGCAAAGCGC", "ATATAAAATAT", "GGGAAACCCGGGAAACCC"]]
faces = build_dictionary(corpus, FACE)
nbh = build_dictionary(corpus, NEIGHBORHOOD, 2)
X = assemble_matrix(corpus, [faces, nbh, kmer_dictionary(4)], radius=2)
print(X.shape, X.spans)
print(X.segment("FACE").round(3))

# %%
# rows within distance 1.0 of the first one in face space
print(epsilon_neighborhood(X.segment("FACE"), 0, 1.0))
