"""One-bit compressed sensing with sublinear-time decoders."""

from .convex import RecoveryProblem, pgd_oracle, project_K, recover_on_subset, solve_linear_over_K
from .core import (
    BinaryTestMatrix,
    BlockIndex,
    GaussianColumns,
    RealMatrix,
    SignVector,
    SparseSignal,
    derive_seed,
    dump_matrix,
    hadamard,
    load_matrix,
    row_direct_sum,
    sign_encode,
    tensor_product,
)
from .grouptesting import (
    build_concat_matrix,
    build_kautz_singleton,
    build_recursive_matrix,
    is_disjunct,
    is_list_disjunct,
    modified_decode,
    naive_decode,
    recursive_decode,
    vandermonde,
)
from .heavy import SketchConfig, build_sketch, c_thr, recover_heavy
from .kernels import BACKEND
from .schemes import (
    SchemeConfig,
    SchemeReport,
    run_l2l2_foreach,
    run_noiseless_forall,
    run_noiseless_foreach,
    run_support_recovery,
)

__version__ = "0.1.0"
