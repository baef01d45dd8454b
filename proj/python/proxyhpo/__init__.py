"""Proxy data and proxy network hyper-parameter search toolkit.

Volumes are numpy float32 arrays indexed [z, y, x]; spacing tuples are
(x, y, z) in millimetres.
"""

from ._proxyhpo import (
    ProxyHpoError,
    UNetSpec,
    __version__,
    dice_score,
    full_spec,
    gen_synthetic_dataset,
    grid_search,
    importance_scores,
    intensity_window_normalize,
    load_volume,
    local_ncc,
    mutual_information,
    pairwise_matrix,
    param_count,
    pearson,
    proxy_schedule,
    read_nifti1,
    read_raw,
    reinforce_search,
    relative_hp_distance,
    resample_trilinear,
    select_proxy,
    select_random,
    speedup,
    split_fifty_fifty,
    surrogate_dice,
    write_raw,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
