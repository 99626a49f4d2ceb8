"""Dataset synthesis and patch loading.

Source cubes are named ``<subject>__<scene>.cube``. The split file assigns
every subject to exactly one of train/val/test, so data from one subject
can never cross splits. Synthesis shells out to the reconstruction
toolkit's CLI (``simulate``) and adds the bilinear network input; samples
are stored as exchange cubes, one triple per source cube. Flips and
90-degree rotations happen at load time.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

from .bilinear import bilinear_cube
from .exchange import read_calibration, read_cube, read_mosaic, write_cube

SPLITS = ("train", "val", "test")


class DatasetError(RuntimeError):
    pass


def parse_split_spec(path: str | Path) -> dict[str, str]:
    assignments: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        subject, _, split = line.partition(" ")
        split = split.strip()
        if split not in SPLITS:
            raise DatasetError(f"split spec: unknown split {split!r} for {subject!r}")
        if subject in assignments and assignments[subject] != split:
            raise DatasetError(
                f"split spec: subject {subject!r} assigned to two splits"
            )
        assignments[subject] = split
    if not assignments:
        raise DatasetError("split spec: empty")
    return assignments


def subject_of(cube_path: Path) -> str:
    stem = cube_path.stem
    subject, sep, _ = stem.partition("__")
    if not sep:
        raise DatasetError(
            f"{cube_path.name}: cube files must be named <subject>__<scene>.cube"
        )
    return subject


def build_dataset(
    cube_dir: str | Path,
    sensor_file: str | Path,
    split_spec: str | Path,
    out_dir: str | Path,
    toolkit_cmd: tuple[str, ...] = ("hsmosaic",),
) -> dict[str, list[str]]:
    """Synthesize (bilinear, intermediate, ideal, calibration) sample files.

    Returns the stems per split. Raises on subject leakage, unassigned
    subjects or an empty source directory.
    """
    cube_dir = Path(cube_dir)
    out_dir = Path(out_dir)
    cubes = sorted(cube_dir.glob("*.cube"))
    if not cubes:
        raise DatasetError(f"{cube_dir}: no .cube files")
    assignments = parse_split_spec(split_spec)

    manifest: dict[str, list[str]] = {split: [] for split in SPLITS}
    for cube_path in cubes:
        subject = subject_of(cube_path)
        if subject not in assignments:
            raise DatasetError(f"subject {subject!r} missing from the split spec")
        split = assignments[subject]
        split_dir = out_dir / split
        split_dir.mkdir(parents=True, exist_ok=True)
        prefix = split_dir / cube_path.stem
        subprocess.run(
            [
                *toolkit_cmd,
                "simulate",
                "--cube", str(cube_path),
                "--sensor", str(sensor_file),
                "--out", str(prefix),
            ],
            check=True,
            capture_output=True,
        )
        mosaic = read_mosaic(prefix.with_suffix(".mosaic"))
        intermediate = read_cube(prefix.with_suffix(".intermediate.cube"))
        write_cube(
            bilinear_cube(mosaic, intermediate.wavelengths),
            prefix.with_suffix(".bilinear.cube"),
        )
        manifest[split].append(cube_path.stem)
    return manifest


@dataclass(frozen=True)
class Sample:
    bilinear: torch.Tensor  # (n_s, H, W)
    intermediate: torch.Tensor  # (n_s, H, W)
    ideal: torch.Tensor  # (n_i, H, W)


def _dihedral(x: torch.Tensor, flip: bool, quarter_turns: int) -> torch.Tensor:
    if flip:
        x = torch.flip(x, dims=(2,))
    if quarter_turns:
        x = torch.rot90(x, quarter_turns, dims=(1, 2))
    return x


class PatchDataset(Dataset):
    """Random patches from one split with dihedral augmentation.

    All three cubes of a sample receive the identical crop and transform,
    so the supervision relationships are preserved by construction.
    """

    def __init__(
        self,
        data_dir: str | Path,
        split: str,
        patch: int = 224,
        augment: bool = True,
        seed: int = 0,
        samples_per_cube: int = 8,
        align_to_tile: bool = True,
    ):
        split_dir = Path(data_dir) / split
        self.stems = sorted(
            p.name[: -len(".bilinear.cube")]
            for p in split_dir.glob("*.bilinear.cube")
        )
        if not self.stems:
            raise DatasetError(f"{split_dir}: no samples")
        self.split_dir = split_dir
        self.patch = patch
        self.augment = augment
        self.seed = seed
        self.samples_per_cube = samples_per_cube
        self._cache: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self.tile = read_mosaic(
            (split_dir / self.stems[0]).with_suffix(".mosaic")
        ).tile
        self.align = self.tile if align_to_tile else 1

    def __len__(self) -> int:
        return len(self.stems) * self.samples_per_cube

    def calibration(self) -> np.ndarray:
        entries, _ = read_calibration(
            (self.split_dir / self.stems[0]).with_suffix(".calib")
        )
        return entries

    def _arrays(self, stem: str):
        if stem not in self._cache:
            base = self.split_dir / stem
            self._cache[stem] = (
                read_cube(base.with_suffix(".bilinear.cube")).data,
                read_cube(base.with_suffix(".intermediate.cube")).data,
                read_cube(base.with_suffix(".ideal.cube")).data,
            )
        return self._cache[stem]

    def __getitem__(self, index: int) -> Sample:
        stem = self.stems[index % len(self.stems)]
        bil, inter, ideal = self._arrays(stem)
        rng = np.random.default_rng((self.seed, index))
        h, w = bil.shape[:2]
        patch = min(self.patch, h, w)
        y0 = int(rng.integers(0, (h - patch) // self.align + 1)) * self.align
        x0 = int(rng.integers(0, (w - patch) // self.align + 1)) * self.align

        def cut(arr: np.ndarray) -> torch.Tensor:
            view = arr[y0 : y0 + patch, x0 : x0 + patch]
            return torch.from_numpy(np.ascontiguousarray(np.moveaxis(view, 2, 0)))

        sample = Sample(cut(bil), cut(inter), cut(ideal))
        if self.augment:
            flip = bool(rng.integers(0, 2))
            turns = int(rng.integers(0, 4))
            sample = Sample(
                _dihedral(sample.bilinear, flip, turns),
                _dihedral(sample.intermediate, flip, turns),
                _dihedral(sample.ideal, flip, turns),
            )
        return sample


def collate(samples: list[Sample]) -> Sample:
    return Sample(
        torch.stack([s.bilinear for s in samples]),
        torch.stack([s.intermediate for s in samples]),
        torch.stack([s.ideal for s in samples]),
    )
