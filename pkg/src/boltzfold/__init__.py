"""Boltzmann ensembles of DNA secondary structures, motif fingerprints and SELEX anomaly analysis."""

__version__ = "0.1.0"

from .core import ParseError, SecondaryStructure, Sequence, ValidationError
from .energy import TOYPARAMS, EnergyParameters, Thermo, face_energy, load_parameters, parse_parameters
from .fingerprint import (FeatureDictionary, FeatureMatrix, Fingerprint, assemble_matrix, bag_of_faces,
                          bag_of_neighborhoods, build_dictionary, epsilon_neighborhood, expected_fingerprint,
                          kmer_counts)
from .folding import (EnsembleDistribution, PairProbabilityMatrix, base_pair_probabilities, boltzmann_ensemble,
                      enumerate_structures, fold_mfe, partition_function)
from .selex import (AptamerProfile, SelexRecord, filter_mutations, label_anomalies, normalize_counts, parse_reads,
                    selective_pressure)
from .structure_graph import Face, StructureGraph, build_graph, extract_faces, motzkin_path, rooted_neighborhood_key

__all__ = [
    "AptamerProfile", "EnergyParameters", "EnsembleDistribution", "Face", "FeatureDictionary", "FeatureMatrix",
    "Fingerprint", "PairProbabilityMatrix", "ParseError", "SecondaryStructure", "SelexRecord", "Sequence",
    "StructureGraph", "TOYPARAMS", "Thermo", "ValidationError", "assemble_matrix", "bag_of_faces",
    "bag_of_neighborhoods", "base_pair_probabilities", "boltzmann_ensemble", "build_dictionary", "build_graph",
    "enumerate_structures", "epsilon_neighborhood", "expected_fingerprint", "extract_faces", "face_energy",
    "filter_mutations", "fold_mfe", "kmer_counts", "label_anomalies", "load_parameters", "motzkin_path",
    "normalize_counts", "parse_parameters", "parse_reads", "partition_function", "rooted_neighborhood_key",
    "selective_pressure",
]
