"""screenops: exact computer algebra for screening-operator constructions.

The package verifies, at finite truncation over Q(params), the algebraic
identities behind screening operators on highest-weight modules: Verma-module
intertwiners for symmetrizable Kac-Moody data, twisted de Rham complexes and
Cartan-style cocycles, free-boson normal ordering and Wick calculus, Virasoro
bosonization, vertex-operator products, and the Wakimoto realization of
affine sl2 with its screening current.
"""

__version__ = "0.1.0"
