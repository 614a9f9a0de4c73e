"""Group means of grouplike tensors in free step-L nilpotent Lie groups.

The package computes the bi-invariant barycenter of weighted collections of
grouplike elements (path signatures in particular) by four independent
algorithms, together with the exact symbolic machinery that generates and
minimizes the closed-form update polynomials behind the coordinate recursion.
"""

from .barycenter import (
    ALGORITHMS,
    BarycenterResult,
    DiscreteMeasure,
    ToleranceError,
    barycenter,
    barycenter_abch,
    barycenter_ambient,
    barycenter_lyndon,
    barycenter_pi1,
    naive_mean,
    online_update,
    residual,
    translate_measure,
)
from .lyndon import LyndonBasis, get_basis, lie_dim, lyndon_words, standard_factorization, star
from .paths import (
    CovarianceMatrix,
    PiecewiseLinearPath,
    expected_sig_bm,
    sample_bm_signature,
    sample_bm_signatures,
    sig_pwl,
    sig_segment,
)
from .polynomials import (
    MonomialOrder,
    RationalPoly,
    buchberger,
    generate_abch_r,
    generate_p,
    generate_pq,
    generate_q,
    generate_r,
    max_p_terms,
    max_r_terms,
    rnf,
    taylor_update_terms,
    term_counts,
)
from .tensor import (
    AdPowerSeries,
    Shape,
    TruncatedTensor,
    apply_ad_series,
    bracket,
    descents,
    exp,
    inv,
    log,
    mul,
    permute,
    pi1,
    tensor_from_json,
    tensor_to_json,
)

__version__ = "0.1.0"
