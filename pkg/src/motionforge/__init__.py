"""motionforge: trajectory-based video motion editing toolkit.

Core pieces:

* :mod:`motionforge.track_core` - track/clip data model and track ops
* :mod:`motionforge.rasterizer` - Gaussian-blob conditioning videos
* :mod:`motionforge.counterfactual` - training-pair generation pipeline
* :mod:`motionforge.camera` - camera-edit track synthesis
* :mod:`motionforge.synthetic_oracle` - exact sprite-scene test oracle
* :mod:`motionforge.evalproto` - evaluation dataset and metrics
* :mod:`motionforge.pipeline_io` - frame-directory I/O and plugin host
* :mod:`motionforge.edit_service` - local interactive editing service
"""

from .config import RunConfig, load_config
from .track_core import (
    BlobVideo,
    LatentShape,
    MotionEdit,
    Track,
    TrackPoint,
    TrackSet,
    VideoClip,
    apply_jitter,
    bezier_resample,
    latent_shape,
    limit_correspondences,
    load_tracks,
    retime_track,
    sample_init_points,
    save_tracks,
)

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "load_config",
    "VideoClip",
    "BlobVideo",
    "Track",
    "TrackPoint",
    "TrackSet",
    "MotionEdit",
    "LatentShape",
    "latent_shape",
    "sample_init_points",
    "limit_correspondences",
    "apply_jitter",
    "bezier_resample",
    "retime_track",
    "save_tracks",
    "load_tracks",
    "__version__",
]
