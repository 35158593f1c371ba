"""Model-agnostic multi-object tracking and segmentation toolkit.

Provides mask set operations with compressed RLE codecs, a quality-gated
track management layer that works against any promptable video segmenter,
KITTI-style result I/O, HOTA / CLEAR evaluation, and a synthetic scene
generator used as a closed-world test oracle.
"""

__version__ = "0.1.0"
