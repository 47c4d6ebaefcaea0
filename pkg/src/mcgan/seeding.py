"""Root-seed splitting.

Every random draw in the pipeline is keyed by (root seed, structural labels)
through `derive_seed`, so any component can be re-derived without serializing
generator state: the scheme is `blake2b("root/label0/label1/...")` truncated
to 63 bits. Checkpoints only need to record the root seed and step counters.
"""

import hashlib

import torch


def derive_seed(root: int, *labels) -> int:
    """Derive a child seed from the root seed and a label path.

    Labels may be strings or integers; they are joined with '/' so
    ("mc", 3, 1) and ("mc", 31) cannot collide.
    """
    key = "/".join([str(int(root))] + [str(l) for l in labels])
    digest = hashlib.blake2b(key.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & 0x7FFF_FFFF_FFFF_FFFF


def torch_generator(root: int, *labels) -> torch.Generator:
    """CPU torch.Generator seeded from the derived seed."""
    gen = torch.Generator(device="cpu")
    gen.manual_seed(derive_seed(root, *labels))
    return gen
