"""Rank-R vector-matrix decomposed radiance field with per-scale frequency expansion.

The scene value at (x, y, z) is reconstructed from three axis vectors and three
complementary-plane matrices per rank component:

    G(x, y, z) = sum_r  v_r^X[x] M_r^YZ[y, z]
               + sum_r  v_r^Y[y] M_r^XZ[x, z]
               + sum_r  v_r^Z[z] M_r^XY[x, y]

One decomposition holds geometry (density), another appearance features. The
trainable parameters live either in the spatial domain (warm-up phase) or in
the DCT domain ("frequency" domain), where per-scale low-pass filters and
learnable masks derive one spatial decomposition per scale (see ``filters``).

Queries against frozen parameters are pure and may run concurrently; expansion
and optimizer writes are exclusive.
"""

import math
from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np
import torch
from torch import nn

from . import container, dct, filters
from .errors import CheckpointError
from .filters import MASK_INIT, MASK_MODES, ScaleConfig
from .grids import lerp_sample
from .validation import check_coord, check_grid

AXES = ("x", "y", "z")
# plane paired with each axis vector: complement axes in (x, y, z) index order
PLANE_AXES = {"x": (1, 2), "y": (0, 2), "z": (0, 1)}
PLANE_NAMES = {"x": "yz", "y": "xz", "z": "xy"}
ROLES = ("density", "app")

CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# numpy contract: plain VM decomposition and point reconstruction
# ---------------------------------------------------------------------------

@dataclass
class VMDecomposition:
    """Numpy view of one decomposition: vectors[a] is (R, N), planes[a] is (R, N, N)."""

    vectors: list
    planes: list

    def __post_init__(self):
        if len(self.vectors) != 3 or len(self.planes) != 3:
            raise ValueError("a VM decomposition has exactly three vectors and three planes")
        self.vectors = [check_grid(v, f"vector[{a}]", ndim=2) for a, v in zip(AXES, self.vectors)]
        self.planes = [check_grid(p, f"plane[{a}]", ndim=3) for a, p in zip(AXES, self.planes)]
        rank = self.vectors[0].shape[0]
        extent = self.vectors[0].shape[1]
        for v in self.vectors:
            if v.shape != (rank, extent):
                raise ValueError(f"inconsistent vector shapes: {[v.shape for v in self.vectors]}")
        for p in self.planes:
            if p.shape != (rank, extent, extent):
                raise ValueError(f"inconsistent plane shapes: {[p.shape for p in self.planes]}")

    @property
    def rank(self) -> int:
        return self.vectors[0].shape[0]

    @property
    def extent(self) -> int:
        return self.vectors[0].shape[1]


def reconstruct_point(vm: VMDecomposition, coord) -> float:
    """Evaluate the decomposition at a normalized [0, 1]^3 coordinate.

    Linear in every factor; coordinates clamp like every grid sampler.
    """
    c = check_coord(coord, 3)
    total = 0.0
    for a, name in enumerate(AXES):
        pa = PLANE_AXES[name]
        for r in range(vm.rank):
            total += lerp_sample(vm.vectors[a][r], c[a : a + 1]) * lerp_sample(
                vm.planes[a][r], c[list(pa)]
            )
    return float(total)


def select_scale(pixel_footprint: float, base_footprint: float, num_scales: int) -> int:
    """Mip level for a pixel footprint: round(log2(fp / base)) clamped to range."""
    if not pixel_footprint > 0 or not base_footprint > 0:
        raise ValueError(
            f"footprints must be positive, got {pixel_footprint} and {base_footprint}"
        )
    level = math.floor(math.log2(pixel_footprint / base_footprint) + 0.5)
    return int(min(max(level, 0), num_scales - 1))


def select_scale_batch(pixel_footprints, base_footprint: float, num_scales: int) -> np.ndarray:
    """Vectorized ``select_scale`` over an array of footprints."""
    fp = np.asarray(pixel_footprints, dtype=np.float64)
    if np.any(fp <= 0) or not base_footprint > 0:
        raise ValueError("footprints must be positive")
    levels = np.floor(np.log2(fp / base_footprint) + 0.5)
    return np.clip(levels, 0, num_scales - 1).astype(np.int64)


@dataclass(frozen=True)
class FieldSample:
    """Density (1/world-unit, non-negative) and RGB in [0, 1]^3 at one point."""

    density: float
    rgb: tuple


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldConfig:
    grid_size: int = 64
    rank_density: int = 4
    rank_appearance: int = 12
    scales: ScaleConfig = dataclass_field(default_factory=ScaleConfig)
    mask_mode: str = "literal"
    epsilon: float = filters.DEFAULT_EPSILON
    mask_init: float | None = None  # None -> MASK_INIT[mask_mode]
    decoder_hidden: int = 32
    dir_freqs: int = 2
    density_scale: float = 10.0
    init_scale: float = 0.1
    no_lpf: bool = False
    no_mask: bool = False
    shared_lpf: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        if self.mask_mode not in MASK_MODES:
            raise ValueError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        if self.grid_size < 2:
            raise ValueError(f"grid_size must be >= 2, got {self.grid_size}")
        if self.no_lpf and self.shared_lpf:
            raise ValueError("no_lpf and shared_lpf are mutually exclusive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")

    @property
    def torch_dtype(self):
        return torch.float32 if self.dtype == "float32" else torch.float64

    @property
    def mask_init_value(self) -> float:
        return MASK_INIT[self.mask_mode] if self.mask_init is None else float(self.mask_init)


def _mlp(in_dim: int, hidden: int, out_dim: int, dtype) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(in_dim, hidden, dtype=dtype),
        nn.ReLU(),
        nn.Linear(hidden, hidden, dtype=dtype),
        nn.ReLU(),
        nn.Linear(hidden, out_dim, dtype=dtype),
    )


# ---------------------------------------------------------------------------
# the trainable field
# ---------------------------------------------------------------------------

class MultiScaleField(nn.Module):
    """Shared-grid field expanded per scale through LPF -> mask -> inverse DCT.

    ``domain`` is ``"spatial"`` during warm-up (factors are spatial grids; all
    scales behave identically) and ``"frequency"`` afterwards (factors are DCT
    coefficients; scales differ by filter and mask).
    """

    def __init__(self, cfg: FieldConfig, seed: int = 0, base_footprint: float = 1.0):
        super().__init__()
        self.cfg = cfg
        self.base_footprint = float(base_footprint)
        self.domain = "spatial"
        self._cache_version = 0
        self._cache = {}

        gen = torch.Generator().manual_seed(int(seed))
        dtype = cfg.torch_dtype
        n = cfg.grid_size

        self.factors = nn.ParameterDict()
        for role, rank in (("density", cfg.rank_density), ("app", cfg.rank_appearance)):
            for ax in AXES:
                self.factors[f"{role}_vec_{ax}"] = nn.Parameter(
                    cfg.init_scale * torch.randn(rank, n, generator=gen, dtype=dtype)
                )
                self.factors[f"{role}_plane_{PLANE_NAMES[ax]}"] = nn.Parameter(
                    cfg.init_scale * torch.randn(rank, n, n, generator=gen, dtype=dtype)
                )

        # one mask per (scale, role, factor kind, plane), shared across ranks
        self.masks = nn.ParameterDict()
        for s in range(cfg.scales.num_scales):
            for role in ROLES:
                for ax in AXES:
                    self.masks[f"{role}_s{s}_vec_{ax}"] = nn.Parameter(
                        torch.full((n,), cfg.mask_init_value, dtype=dtype)
                    )
                    self.masks[f"{role}_s{s}_plane_{PLANE_NAMES[ax]}"] = nn.Parameter(
                        torch.full((n, n), cfg.mask_init_value, dtype=dtype)
                    )

        feat_dim = 3 * cfg.rank_appearance
        dir_dim = 3 + 6 * cfg.dir_freqs
        self.decoder = _mlp(feat_dim + dir_dim, cfg.decoder_hidden, 3, dtype)
        with torch.no_grad():
            for module in self.decoder:
                if isinstance(module, nn.Linear):
                    bound = 1.0 / math.sqrt(module.in_features)
                    module.weight.uniform_(-bound, bound, generator=gen)
                    module.bias.uniform_(-bound, bound, generator=gen)

        self.register_buffer("dct_mat", torch.from_numpy(dct.dct_matrix(n).copy()).to(dtype))
        sigmas = [
            filters.sigma_for_scale(n, 2.0 if cfg.shared_lpf else red)
            for red in cfg.scales.reduction_factors
        ]
        if cfg.no_lpf:
            lpf_vec = np.ones((cfg.scales.num_scales, n))
            lpf_plane = np.ones((cfg.scales.num_scales, n, n))
        else:
            lpf_vec = np.stack([filters.build_lpf((n,), s) for s in sigmas])
            lpf_plane = np.stack([filters.build_lpf((n, n), s) for s in sigmas])
        self.register_buffer("lpf_vec", torch.from_numpy(lpf_vec).to(dtype))
        self.register_buffer("lpf_plane", torch.from_numpy(lpf_plane).to(dtype))

    # -- bookkeeping -------------------------------------------------------

    @property
    def num_scales(self) -> int:
        return self.cfg.scales.num_scales

    @property
    def torch_dtype(self):
        return self.cfg.torch_dtype

    @property
    def cache_version(self) -> int:
        return self._cache_version

    def invalidate_cache(self) -> None:
        """Mark expanded grids stale; called after every optimizer step."""
        self._cache_version += 1
        self._cache.clear()

    def _check_scale(self, scale_index: int) -> int:
        if not 0 <= scale_index < self.num_scales:
            raise ValueError(
                f"scale_index {scale_index} out of range [0, {self.num_scales})"
            )
        return int(scale_index)

    def select_scale(self, pixel_footprint: float) -> int:
        return select_scale(pixel_footprint, self.base_footprint, self.num_scales)

    # -- expansion ---------------------------------------------------------

    def _gate(self, coeffs: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        if self.cfg.no_mask:
            return coeffs
        eps = self.cfg.epsilon
        if self.cfg.mask_mode == "literal":
            return torch.sigmoid(coeffs * mask) - eps
        return coeffs * (torch.sigmoid(mask) - eps)

    def _expand_factor(self, role: str, kind: str, name: str, scale: int) -> torch.Tensor:
        """LPF -> mask -> inverse DCT for one frequency-domain factor tensor."""
        coeffs = self.factors[f"{role}_{kind}_{name}"]
        c = self.dct_mat
        if kind == "vec":
            filtered = coeffs * self.lpf_vec[scale]
            masked = self._gate(filtered, self.masks[f"{role}_s{scale}_vec_{name}"])
            return masked @ c  # rows are coefficient vectors
        filtered = coeffs * self.lpf_plane[scale]
        masked = self._gate(filtered, self.masks[f"{role}_s{scale}_plane_{name}"])
        return c.T @ masked @ c

    def spatial_factors(self, scale_index: int) -> dict:
        """Spatial-domain factor tensors for one scale, keyed like ``self.factors``.

        In the spatial domain the parameters are returned as-is (every scale is
        the same grid). In the frequency domain the expansion graph is rebuilt
        whenever gradients are enabled; pure reads are cached per
        ``cache_version``.
        """
        scale = self._check_scale(scale_index)
        if self.domain == "spatial":
            return dict(self.factors)

        cacheable = not torch.is_grad_enabled()
        key = (self._cache_version, scale)
        if cacheable and key in self._cache:
            return self._cache[key]
        out = {}
        for role in ROLES:
            for ax in AXES:
                out[f"{role}_vec_{ax}"] = self._expand_factor(role, "vec", ax, scale)
                pname = PLANE_NAMES[ax]
                out[f"{role}_plane_{pname}"] = self._expand_factor(role, "plane", pname, scale)
        if cacheable:
            self._cache[key] = out
        return out

    def _factor_stacks(self, role: str, scale_index: int):
        """(3, R, N, 1) vector and (3, R, N, N) plane stacks for grid_sample."""
        scale = self._check_scale(scale_index)
        cacheable = not torch.is_grad_enabled()
        key = ("stacks", self._cache_version, self.domain, role, scale)
        if cacheable and key in self._cache:
            return self._cache[key]
        grids = self.spatial_factors(scale)
        vecs = torch.stack([grids[f"{role}_vec_{ax}"] for ax in AXES]).unsqueeze(-1)
        planes = torch.stack([grids[f"{role}_plane_{PLANE_NAMES[ax]}"] for ax in AXES])
        if cacheable:
            self._cache[key] = (vecs, planes)
        return vecs, planes

    def enter_frequency_domain(self) -> None:
        """One-time handoff: transform spatial factors to DCT coefficients.

        In multiplicative mode the coefficients are rescaled by the initial
        gate value so renders are approximately preserved across the handoff
        (exactly preserved for all-pass filters).
        """
        if self.domain != "spatial":
            raise RuntimeError("field is already in the frequency domain")
        c = self.dct_mat
        gain = 1.0
        if self.cfg.mask_mode == "multiplicative" and not self.cfg.no_mask:
            gain = float(torch.sigmoid(torch.tensor(self.cfg.mask_init_value)) - self.cfg.epsilon)
            if gain <= 1e-3:
                gain = 1.0
        with torch.no_grad():
            for key, param in self.factors.items():
                if "_vec_" in key:
                    param.copy_((param @ c.T) / gain)
                else:
                    param.copy_((c @ param @ c.T) / gain)
        self.domain = "frequency"
        self.invalidate_cache()

    # -- queries -----------------------------------------------------------

    def _plane_products(self, role: str, coords: torch.Tensor, scale_index: int) -> torch.Tensor:
        """Per-axis interpolated vector*plane products: (3, R, P).

        Sampling uses torch's bilinear grid_sample with align_corners=True,
        which matches the node-centered [0, 1] convention of grids.lerp_sample
        (coordinate 0 is the first node, 1 the last; out-of-range clamps).
        """
        vecs, planes = self._factor_stacks(role, scale_index)
        c = coords.clamp(0.0, 1.0) * 2.0 - 1.0  # (P, 3) in grid_sample units
        zeros = torch.zeros_like(c[:, 0])
        # vector factor a interpolates along axis a; planes use the paired axes,
        # with grid x addressing the last tensor dim and grid y the first
        vec_grid = torch.stack(
            [torch.stack([zeros, c[:, a]], dim=-1) for a in range(3)]
        ).unsqueeze(1)  # (3, 1, P, 2)
        plane_grid = torch.stack(
            [
                torch.stack([c[:, v], c[:, u]], dim=-1)
                for u, v in (PLANE_AXES[ax] for ax in AXES)
            ]
        ).unsqueeze(1)
        vec_vals = torch.nn.functional.grid_sample(
            vecs, vec_grid, mode="bilinear", padding_mode="border", align_corners=True
        )[:, :, 0]  # (3, R, P)
        plane_vals = torch.nn.functional.grid_sample(
            planes, plane_grid, mode="bilinear", padding_mode="border", align_corners=True
        )[:, :, 0]
        return vec_vals * plane_vals

    def density_feature(self, coords: torch.Tensor, scale_index: int) -> torch.Tensor:
        """Raw geometry reconstruction (pre-activation) at (P, 3) coordinates."""
        return self._plane_products("density", coords, scale_index).sum(dim=(0, 1))

    def appearance_feature(self, coords: torch.Tensor, scale_index: int) -> torch.Tensor:
        """Per-plane appearance products, concatenated: (P, 3 * rank_appearance).

        Feature order is axis-major: x-plane ranks, then y, then z.
        """
        prod = self._plane_products("app", coords, scale_index)
        return prod.permute(2, 0, 1).reshape(coords.shape[0], -1)

    def density_activation(self, feature: torch.Tensor) -> torch.Tensor:
        """Non-negative density; shifted softplus clamped so 0 maps exactly to 0."""
        z = feature * self.cfg.density_scale
        return (torch.nn.functional.softplus(z) - math.log(2.0)).clamp_min(0.0)

    def encode_direction(self, dirs: torch.Tensor) -> torch.Tensor:
        parts = [dirs]
        for k in range(self.cfg.dir_freqs):
            ang = dirs * (math.pi * (2.0 ** k))
            parts.extend([torch.sin(ang), torch.cos(ang)])
        return torch.cat(parts, dim=-1)

    def decode(self, feature: torch.Tensor, dirs: torch.Tensor) -> torch.Tensor:
        """Map appearance features + view direction to RGB in [0, 1]^3."""
        inp = torch.cat([feature, self.encode_direction(dirs)], dim=-1)
        return torch.sigmoid(self.decoder(inp))

    def density_at(self, coords: torch.Tensor, scale_index: int) -> torch.Tensor:
        """Activated (non-negative) density at (P, 3) coordinates."""
        return self.density_activation(self.density_feature(coords, scale_index))

    def rgb_at(self, coords: torch.Tensor, dirs: torch.Tensor, scale_index: int) -> torch.Tensor:
        return self.decode(self.appearance_feature(coords, scale_index), dirs)

    def query_batch(self, coords: torch.Tensor, dirs: torch.Tensor, scale_index: int):
        """Density and RGB at (P, 3) coordinates viewed from (P, 3) unit directions."""
        return self.density_at(coords, scale_index), self.rgb_at(coords, dirs, scale_index)

    def query(self, coord, direction, scale_index: int) -> FieldSample:
        """Single-point convenience wrapper returning a ``FieldSample``."""
        dtype = self.cfg.torch_dtype
        coords = torch.as_tensor(np.asarray(coord, dtype=np.float64), dtype=dtype).reshape(1, 3)
        dirs = torch.as_tensor(np.asarray(direction, dtype=np.float64), dtype=dtype).reshape(1, 3)
        with torch.no_grad():
            sigma, rgb = self.query_batch(coords, dirs, scale_index)
        return FieldSample(density=float(sigma[0]), rgb=tuple(float(v) for v in rgb[0]))

    # -- numpy views ---------------------------------------------------------

    def vm_arrays(self, role: str, scale_index: int | None = None) -> VMDecomposition:
        """Numpy VM decomposition: raw parameters (scale None) or one expanded scale."""
        if role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {role!r}")
        if scale_index is None:
            grids = {k: v.detach() for k, v in self.factors.items()}
        else:
            with torch.no_grad():
                grids = self.spatial_factors(scale_index)
        vecs = [grids[f"{role}_vec_{ax}"].cpu().double().numpy() for ax in AXES]
        planes = [grids[f"{role}_plane_{PLANE_NAMES[ax]}"].cpu().double().numpy() for ax in AXES]
        return VMDecomposition(vecs, planes)

    # -- checkpoints ---------------------------------------------------------

    def save_checkpoint(self, path, step: int = 0) -> None:
        cfg = self.cfg
        entries = {
            "format_version": container.scalar(CHECKPOINT_VERSION, "<i8"),
            "step": container.scalar(int(step), "<i8"),
            "domain": container.string_entry(self.domain),
            "mask_mode": container.string_entry(cfg.mask_mode),
            "dtype": container.string_entry(cfg.dtype),
            "epsilon": container.scalar(cfg.epsilon),
            "mask_init": container.scalar(cfg.mask_init_value),
            "grid_size": container.scalar(cfg.grid_size, "<i8"),
            "rank_density": container.scalar(cfg.rank_density, "<i8"),
            "rank_appearance": container.scalar(cfg.rank_appearance, "<i8"),
            "num_scales": container.scalar(cfg.scales.num_scales, "<i8"),
            "reduction_factors": np.asarray(cfg.scales.reduction_factors, dtype="<f8"),
            "decoder_hidden": container.scalar(cfg.decoder_hidden, "<i8"),
            "dir_freqs": container.scalar(cfg.dir_freqs, "<i8"),
            "density_scale": container.scalar(cfg.density_scale),
            "init_scale": container.scalar(cfg.init_scale),
            "no_lpf": container.scalar(cfg.no_lpf, "u1"),
            "no_mask": container.scalar(cfg.no_mask, "u1"),
            "shared_lpf": container.scalar(cfg.shared_lpf, "u1"),
            "base_footprint": container.scalar(self.base_footprint),
        }
        for key, param in self.factors.items():
            entries[f"factor/{key}"] = param.detach().cpu().numpy()
        for key, param in self.masks.items():
            entries[f"mask/{key}"] = param.detach().cpu().numpy()
        for key, tensor in self.decoder.state_dict().items():
            entries[f"decoder/{key}"] = tensor.cpu().numpy()
        container.write_container(path, entries)

    @classmethod
    def load_checkpoint(cls, path) -> tuple["MultiScaleField", int]:
        entries = container.read_container(path)
        try:
            version = int(entries["format_version"])
            if version != CHECKPOINT_VERSION:
                raise CheckpointError(
                    f"{path}: checkpoint version {version} unsupported "
                    f"(expected {CHECKPOINT_VERSION})"
                )
            cfg = FieldConfig(
                grid_size=int(entries["grid_size"]),
                rank_density=int(entries["rank_density"]),
                rank_appearance=int(entries["rank_appearance"]),
                scales=ScaleConfig(
                    num_scales=int(entries["num_scales"]),
                    reduction_factors=tuple(entries["reduction_factors"].tolist()),
                ),
                mask_mode=container.entry_string(entries["mask_mode"]),
                epsilon=float(entries["epsilon"]),
                mask_init=float(entries["mask_init"]),
                decoder_hidden=int(entries["decoder_hidden"]),
                dir_freqs=int(entries["dir_freqs"]),
                density_scale=float(entries["density_scale"]),
                init_scale=float(entries["init_scale"]),
                no_lpf=bool(entries["no_lpf"]),
                no_mask=bool(entries["no_mask"]),
                shared_lpf=bool(entries["shared_lpf"]),
                dtype=container.entry_string(entries["dtype"]),
            )
            field = cls(cfg, seed=0, base_footprint=float(entries["base_footprint"]))
            field.domain = container.entry_string(entries["domain"])
            if field.domain not in ("spatial", "frequency"):
                raise CheckpointError(f"{path}: unknown domain {field.domain!r}")
            dtype = cfg.torch_dtype
            with torch.no_grad():
                for key, param in field.factors.items():
                    param.copy_(torch.from_numpy(entries[f"factor/{key}"]).to(dtype))
                for key, param in field.masks.items():
                    param.copy_(torch.from_numpy(entries[f"mask/{key}"]).to(dtype))
                decoder_state = {
                    key[len("decoder/"):]: torch.from_numpy(val).to(dtype)
                    for key, val in entries.items()
                    if key.startswith("decoder/")
                }
                field.decoder.load_state_dict(decoder_state)
            step = int(entries["step"])
        except KeyError as exc:
            raise CheckpointError(f"{path}: checkpoint missing entry {exc}") from exc
        field.invalidate_cache()
        return field, step


def clone_config(cfg: FieldConfig, **overrides) -> FieldConfig:
    return replace(cfg, **overrides)
