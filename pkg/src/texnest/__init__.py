"""Voxel-volume analysis of layered textile stacks.

Core pieces: grid containers and classification transforms (`grid`),
HDF5/NRRD/CSV formats (`io`), two-point statistics (`descriptors`),
layer-spacing and nesting analysis (`nesting`), losses and segmentation
scores (`metrics`), sliding-window tiling and blending (`patching`), and
a synthetic plain-weave generator (`synth`).
"""

from .errors import ConsistencyError, CoverageError, FormatError, TexnestError
from .grid import (
    CLASS_FILL,
    CLASS_MATRIX,
    CLASS_WEFT,
    DEFAULT_VOXEL_PITCH_MM,
    GridGeometry,
    LabelVolume,
    OneHotMask,
    ProbabilityField,
    argmax_decode,
    one_hot_encode,
    softmax_field,
)
from .io import (
    DatasetBundle,
    read_h5_bundle,
    read_nrrd,
    read_patch_scores,
    read_spectrum_csv,
    write_h5_bundle,
    write_nrrd,
    write_patch_scores,
    write_spectrum_csv,
)
from .descriptors import (
    CorrelationField,
    DescriptorSet,
    axis_spectrum,
    class_correlation,
    descriptor_mse,
    descriptor_set,
    s2_brute,
    s2_fft,
    volume_fractions,
)
from .nesting import (
    CompactionSpec,
    NestingReport,
    PeakEstimate,
    Spectrum1D,
    detect_peaks,
    interpolate_spectrum,
    laminate_thickness,
    layer_thickness,
    nesting_factor,
)
from .metrics import (
    ClassScore,
    ConfusionMatrix,
    LossConfig,
    ScoreReport,
    composite_loss,
    confusion,
    cross_entropy,
    dice_loss,
    iou_f1,
    write_scores_csv,
)
from .patching import PatchGrid, gaussian_window, mirror_pad, patch_grid, stitch
from .synth import WeaveSpec, generate_plain_weave, nesting_ground_truth, random_layer_offsets

__version__ = "0.1.0"
