"""Cross-check against a recorded run of the original C program (p=256, w=2, K=127).

Its hex printer skipped every byte whose index is a multiple of 32, so only
123 of the 127 components of each string were recorded. The attack works
component by component, so every recorded component can still be checked.
"""

from stringkex.attack import recover_effective_key, recover_shared
from stringkex.core import RingParams

K = 127

RECORDED = {
    "g": (
        "93444ff1380add6ae67dba5444e16cffa02679ba50e6c66cf72b18c7cf53d397"
        "2253d02c303a12aef467f2d6d3f276f96b304951f6b64922ce10f121e35306a6"
        "8932d6c34584b8ac778e7f690478d434c2252a786e4c467e3d6762902036a99a"
        "0d6ddf91258b08b30a71b78345eb456b15bdd96203589f6aba308b"
    ),
    "A": (
        "5e47a84e9c3934d60b9c86eac559446036b4c3922eb5d69f6214d0ed57139955"
        "e5f2a66019720222fd1c280a811f54fceca2c1f66d532cd35c0ed5a01c0f0f76"
        "26a0f3981a163a79ed4caf92e2e992121a4ef84708f4a510555a140f5f48f78d"
        "ae89da8100ccb46a4140ceb1fd03cf382d99532c233a060c065985"
    ),
    "B": (
        "64f5bad9a33bc6fb07cf101e6ec86507d607daa28dec4878c47573d23b9bb476"
        "d04a6a0c37b400ab8f364b048b8fad94723ed81a0437c3fcc3373842e93dd0ad"
        "6743cce4138fcd7afe363ead967c6696b979dea48a65aa5a04d47d01331761ed"
        "a41e9eeb6f45196e74d37bccc7c3b127898047dcf1440f3527e7f5"
    ),
    "s": (
        "c96eed661ff0575fdec2acaca370ed58b4a1c0fab73f98b3b1cafb74035b8e70"
        "97c7b8409ecc30078e551da81906ffed952800dd0fb65a918d19442b16c9dd5d"
        "081d15ffcc4de31340d4ceeeecf51caca15a9c1b945d219c0c794bde4cdd0f6a"
        "efe28f1b9e321dbb07f6dade1f5b8b9ce154898e91d656134b6e27"
    ),
    "eve": (
        "c96eed661ff0575fdec2acaca370ed58b4a1c0fab73f98b3b1cafb74035b8e70"
        "97c7b8409ecc30078e551da81906ffed952800dd0fb65a918d19442b16c9dd5d"
        "081d15ffcc4de31340d4ceeeecf51caca15a9c1b945d219c0c794bde4cdd0f6a"
        "efe28f1b9e321dbb07f6dade1f5b8b9ce154898e91d656134b6e27"
    ),
}


def _components(hex_text, n=K):
    values = iter(bytes.fromhex(hex_text))
    return {k: next(values) for k in range(n) if k % 32}


def test_recorded_run_layout():
    for text in RECORDED.values():
        assert len(bytes.fromhex(text)) == K - len(range(0, K, 32))


def test_attack_reproduces_recorded_shared_key():
    params = RingParams(256, 2)
    g, A, B, s = (_components(RECORDED[n]) for n in ("g", "A", "B", "s"))
    assert RECORDED["eve"] == RECORDED["s"]
    for k in g:
        key = recover_effective_key(params, [g[k]], [A[k]])
        assert recover_shared(params, key, [B[k]])[0] == s[k], k

