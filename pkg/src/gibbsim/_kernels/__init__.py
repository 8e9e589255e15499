"""Chain-kernel backend selection.

The compiled extension is used when importable; otherwise the pure-Python
twin takes over.  Both produce bit-identical output for the same seed.  Set
``GIBBSIM_KERNEL=python`` (or ``cython``) to force a backend; the benchmark
and the equivalence tests use this to compare the two.
"""

import os

from . import _pychain

_preference = os.environ.get("GIBBSIM_KERNEL", "auto").lower()
if _preference not in ("auto", "cython", "python"):
    raise ImportError(
        f"GIBBSIM_KERNEL must be auto, cython, or python (got {_preference!r})")

compiled = None
if _preference in ("auto", "cython"):
    try:
        from . import _cychain as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None
        if _preference == "cython":
            raise

if compiled is not None:
    BACKEND = "cython"
    run_chain = compiled.run_chain
    new_chain = compiled.CyPairwiseChain
else:
    BACKEND = "python"
    run_chain = _pychain.run_chain
    new_chain = _pychain.PairwiseChain

python_run_chain = _pychain.run_chain
python_new_chain = _pychain.PairwiseChain
compiled_run_chain = compiled.run_chain if compiled is not None else None
