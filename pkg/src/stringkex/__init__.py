"""String-based key exchange over a quasi-commutative ring transform, and its break."""

from .attack import AttackInfeasible, EffectiveKey, eve, recover_effective_key, recover_shared
from .core import (
    AffineMap,
    ParamError,
    RingParams,
    affine_apply,
    affine_of_string,
    fixed_point_spectrum,
    gw_step,
    mod_inverse,
    t_fold,
)
from .hashstream import SHA256, SHA512, STUB, DigestFunction, HashChainState, get_digest
from .protocol import (
    KeyPair,
    ProtocolConfig,
    Session,
    Transcript,
    derive_public,
    derive_shared,
    gen_generator,
    gen_secret,
    w_transform,
)

__version__ = "0.1.0"
