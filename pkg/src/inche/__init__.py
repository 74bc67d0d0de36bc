"""Incremental additively homomorphic encryption for relational fields.

Instead of paying a full encryption per field value, a context precomputes a
small cache of pivot and radix ciphertexts and composes any value's
ciphertext from them with cheap homomorphic additions. Column aggregates
collapse further: plaintext frequency counts turn the cache into an encrypted
total with a handful of scalar multiplications, independent of row count.
"""

from .aggregate import (
    FrequencyAccumulator,
    accumulate,
    accumulate_all,
    avg_from_sum,
    finalize_sum,
    naive_sum,
    weighted_plaintext_sum,
)
from .backend import (
    Ciphertext,
    SchemeParams,
    SecretKey,
    deserialize_key,
    he_add,
    he_scalar_mul,
    keygen,
    serialize_key,
)
from .core import (
    Decomposition,
    IncheContext,
    NuanceTable,
    OpCounters,
    OpSnapshot,
    PivotIndex,
    RandomizationReport,
    build_context,
    decompose,
    inche_encrypt,
    inche_encrypt_budgeted,
    pivot_lookup,
    randomization_smoke_test,
)
from .dataio import ColumnSource, gen_psize_like, gen_random, read_csv_column
from .errors import (
    CiphertextError,
    CorrectnessError,
    DataError,
    IncheError,
    ParameterError,
    PlaintextRangeError,
    SchemeMismatchError,
)

__all__ = [
    "Ciphertext",
    "CiphertextError",
    "ColumnSource",
    "CorrectnessError",
    "DataError",
    "Decomposition",
    "FrequencyAccumulator",
    "IncheContext",
    "IncheError",
    "NuanceTable",
    "OpCounters",
    "OpSnapshot",
    "ParameterError",
    "PivotIndex",
    "PlaintextRangeError",
    "RandomizationReport",
    "SchemeMismatchError",
    "SchemeParams",
    "SecretKey",
    "accumulate",
    "accumulate_all",
    "avg_from_sum",
    "build_context",
    "decompose",
    "deserialize_key",
    "finalize_sum",
    "gen_psize_like",
    "gen_random",
    "he_add",
    "he_scalar_mul",
    "inche_encrypt",
    "inche_encrypt_budgeted",
    "keygen",
    "naive_sum",
    "pivot_lookup",
    "randomization_smoke_test",
    "read_csv_column",
    "serialize_key",
    "weighted_plaintext_sum",
]
