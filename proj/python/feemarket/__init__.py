"""Pay-as-bid fee market toolkit: equilibrium bids, miner operation
thresholds, welfare analysis, and a Monte Carlo discrete-event simulator."""

try:
    from ._feemarket import *  # noqa: F401,F403
    from ._feemarket import __version__, uc, eo, sim, patient  # noqa: F401
except ImportError:  # development layout: module next to the package on sys.path
    from _feemarket import *  # noqa: F401,F403
    from _feemarket import __version__, uc, eo, sim, patient  # noqa: F401
