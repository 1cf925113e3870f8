"""
Shared components of the USAT block lab.

This package holds the experiment library used by the lab CLI and the
plug-in table trainer:

- gf2, gf2m: GF(2) vectors, matrices, affine solving and GF(2^w) arithmetic
- hashing: seeded streams, parity matrices, right-hand sides, sign-flip families
- ensemble: masked formulas, the block sampler and solution enumeration
- sils: the sign-invariant local sketch
- symmetry: involutions, sign flips, back-maps and the neutrality tables
- factor_graph, locality: neighborhoods, charts and the locality experiments
- decoders: the decoder registry, wrappers and success experiments
- ledger, codec: description ledgers and the two witness codecs
"""

__version__ = "1.0.0"
__author__ = "USAT Lab"

__all__ = [
    "codec",
    "decoders",
    "ensemble",
    "exceptions",
    "factor_graph",
    "gf2",
    "gf2m",
    "hashing",
    "ledger",
    "locality",
    "parallel",
    "sils",
    "symmetry",
]
