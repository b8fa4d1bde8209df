"""Backyard cuckoo hashing: constant worst-case dictionaries and their succinct variant."""

from .backyard import BackyardDict, BackyardParams, derive_params, overflow_count, space_words
from .bins import BinomialBinTable, PHFBinTable, PlainBinTable, make_bin_table
from .combinatorics import BoundedSubsetCode, info_bound, rank_subset, unrank_subset
from .cuckoo import CuckooState
from .errors import (
    BackyardError,
    CapacityError,
    DomainError,
    DuplicateError,
    IgnoredElement,
    ParameterError,
    StructuralFailure,
)
from .filter import MembershipFilter, filter_insert, filter_new, filter_query
from .hash_family import KWiseHash, PairwiseHash, sample_kwise, sample_pairwise
from .permutations import ChoppedPerm, FeistelPerm, NRPerm, TablePerm, nr_perm_new, sample_perm
from .succinct import SpaceAudit, SuccinctDict, SuccinctParams, bits_used, outer_bin_load_stats

__all__ = [
    "BackyardDict",
    "BackyardError",
    "BackyardParams",
    "BinomialBinTable",
    "BoundedSubsetCode",
    "CapacityError",
    "ChoppedPerm",
    "CuckooState",
    "DomainError",
    "DuplicateError",
    "FeistelPerm",
    "IgnoredElement",
    "KWiseHash",
    "MembershipFilter",
    "NRPerm",
    "PHFBinTable",
    "PairwiseHash",
    "ParameterError",
    "PlainBinTable",
    "SpaceAudit",
    "StructuralFailure",
    "SuccinctDict",
    "SuccinctParams",
    "TablePerm",
    "bits_used",
    "derive_params",
    "filter_insert",
    "filter_new",
    "filter_query",
    "info_bound",
    "make_bin_table",
    "nr_perm_new",
    "outer_bin_load_stats",
    "overflow_count",
    "rank_subset",
    "sample_kwise",
    "sample_pairwise",
    "sample_perm",
    "space_words",
    "unrank_subset",
]
