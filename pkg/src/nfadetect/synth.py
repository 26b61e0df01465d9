"""Synthetic score maps: pure noise and planted rectangular targets.

All randomness comes from numpy's PCG64 stream seeded from the spec, so a
spec fully determines its output; the generator identifier is recorded in
corpus manifests for cross-checking.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .io import BinaryMask, ScoreMap, save_mask, save_scoremap

RNG_ALGORITHM = "pcg64"


@dataclass(frozen=True)
class NoiseLaw:
    """Pixel score law: uniform on [a, b] or a beta(a, b) draw."""

    kind: str  # "uniform" or "beta"
    a: float
    b: float

    def __post_init__(self):
        if self.kind == "uniform":
            if not (0.0 <= self.a <= self.b <= 1.0):
                raise ValueError(f"uniform bounds must satisfy 0 <= a <= b <= 1, got {self}")
        elif self.kind == "beta":
            if self.a <= 0 or self.b <= 0:
                raise ValueError(f"beta parameters must be positive, got {self}")
        else:
            raise ValueError(f"unknown noise law {self.kind!r}")

    def sample(self, rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
        if self.kind == "uniform":
            if self.a == self.b:
                return np.full(shape, self.a)
            return rng.uniform(self.a, self.b, size=shape)
        return rng.beta(self.a, self.b, size=shape)


@dataclass(frozen=True)
class TargetSpec:
    """A w x h rectangle centered at (cx, cy) with a peak intensity."""

    cx: int
    cy: int
    w: int
    h: int
    intensity: float

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"target size must be >= 1x1, got {self.w}x{self.h}")
        if not (0.0 < self.intensity <= 1.0):
            raise ValueError(f"intensity must be in (0, 1], got {self.intensity}")

    def extent(self) -> tuple[int, int, int, int]:
        """(x0, y0, x1, y1) half-open pixel extent."""
        x0 = self.cx - self.w // 2
        y0 = self.cy - self.h // 2
        return x0, y0, x0 + self.w, y0 + self.h


@dataclass(frozen=True)
class SynthSpec:
    width: int
    height: int
    noise: NoiseLaw
    seed: int
    targets: tuple[TargetSpec, ...] = ()
    profile: str = "solid"  # or "gaussian" for an intensity falloff

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.profile not in ("solid", "gaussian"):
            raise ValueError(f"unknown target profile {self.profile!r}")
        for t in self.targets:
            x0, y0, x1, y1 = t.extent()
            if x0 < 0 or y0 < 0 or x1 > self.width or y1 > self.height:
                raise ValueError(f"target {t} exceeds {self.width}x{self.height} image")


def _rng(spec: SynthSpec) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(spec.seed))


def generate_noise_map(spec: SynthSpec) -> ScoreMap:
    """Pure noise map drawn i.i.d. from the spec's law (no targets read)."""
    noise = spec.noise.sample(_rng(spec), (spec.height, spec.width))
    return ScoreMap(np.clip(noise, 0.0, 1.0))


def plant_targets(spec: SynthSpec) -> tuple[ScoreMap, BinaryMask]:
    """Noise map with targets burned in as max(noise, target profile).

    The mask marks exactly the target rectangles (their union when targets
    overlap), regardless of whether the noise locally exceeds the target.
    """
    scores = np.asarray(generate_noise_map(spec).scores).copy()
    mask = np.zeros((spec.height, spec.width), dtype=np.uint8)
    for t in spec.targets:
        x0, y0, x1, y1 = t.extent()
        mask[y0:y1, x0:x1] = 1
        if spec.profile == "solid":
            profile = t.intensity
        else:
            ys, xs = np.mgrid[y0:y1, x0:x1]
            sx = max(t.w / 4.0, 0.5)
            sy = max(t.h / 4.0, 0.5)
            profile = t.intensity * np.exp(
                -0.5 * (((xs - t.cx) / sx) ** 2 + ((ys - t.cy) / sy) ** 2)
            )
        scores[y0:y1, x0:x1] = np.maximum(scores[y0:y1, x0:x1], profile)
    return ScoreMap(scores), BinaryMask(mask)


def random_targets(
    rng: np.random.Generator,
    width: int,
    height: int,
    count: int,
    target_w: int,
    target_h: int,
    intensity: float,
) -> tuple[TargetSpec, ...]:
    """Uniformly placed targets that fit entirely inside the image."""
    targets = []
    for _ in range(count):
        x0 = int(rng.integers(0, width - target_w + 1))
        y0 = int(rng.integers(0, height - target_h + 1))
        targets.append(
            TargetSpec(
                cx=x0 + target_w // 2,
                cy=y0 + target_h // 2,
                w=target_w,
                h=target_h,
                intensity=intensity,
            )
        )
    return tuple(targets)


def generate_corpus(
    out_dir: str,
    n: int,
    width: int,
    height: int,
    noise: NoiseLaw,
    seed: int,
    targets_per_image: int = 0,
    target_w: int = 5,
    target_h: int = 5,
    target_intensity: float = 0.9,
    profile: str = "solid",
) -> list[dict]:
    """Write ``n`` map/mask pairs plus a JSON-lines manifest; returns entries.

    Each image gets its own child seed spawned from the corpus seed, so the
    corpus is reproducible as a whole and per image.
    """
    os.makedirs(out_dir, exist_ok=True)
    seeds = np.random.SeedSequence(seed).spawn(n)
    entries = []
    for i, ss in enumerate(seeds):
        child_seed = int(ss.generate_state(1)[0])
        placement_rng = np.random.Generator(np.random.PCG64(child_seed + 1))
        targets = random_targets(
            placement_rng, width, height, targets_per_image,
            target_w, target_h, target_intensity,
        )
        spec = SynthSpec(
            width=width, height=height, noise=noise, seed=child_seed,
            targets=targets, profile=profile,
        )
        smap, mask = plant_targets(spec)
        map_path = os.path.join(out_dir, f"map_{i:05d}.smap")
        mask_path = os.path.join(out_dir, f"mask_{i:05d}.pgm")
        save_scoremap(smap, map_path)
        save_mask(mask, mask_path)
        entries.append(
            {
                "index": i,
                "map": os.path.basename(map_path),
                "mask": os.path.basename(mask_path),
                "rng": RNG_ALGORITHM,
                "spec": asdict(spec),
            }
        )
    with open(os.path.join(out_dir, "manifest.jsonl"), "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return entries
