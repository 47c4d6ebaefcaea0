from .generator import (
    GeneratorConfig,
    GlobalGenerator,
    LocalEnhancer,
    TrackGenerator,
    build_generator,
    fuse,
    init_weights,
)
from .discriminator import (
    STEM_STRIDE,
    DiscriminatorConfig,
    MultiScaleDiscriminator,
    PatchBranch,
    SharedStem,
    build_discriminator,
    build_pyramid,
)

__all__ = [
    "GeneratorConfig",
    "GlobalGenerator",
    "LocalEnhancer",
    "TrackGenerator",
    "build_generator",
    "fuse",
    "init_weights",
    "DiscriminatorConfig",
    "MultiScaleDiscriminator",
    "SharedStem",
    "PatchBranch",
    "build_discriminator",
    "build_pyramid",
    "STEM_STRIDE",
]
