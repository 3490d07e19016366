"""Chunked path ensembles with per-trajectory random lanes."""

from dataclasses import dataclass, replace

import numpy as np

from ..brownian import sample_initial, sample_paths, sample_two_sided, time_grid
from ..montecarlo import ensemble_map
from ..rng import LEG_FORWARD, RngStream


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything needed to regenerate a block of paths from its indices.

    ``x0`` is the common start point unless ``nu`` (a NuSpec) is given, in
    which case each trajectory draws its own start. ``frame0`` is an optional
    fixed initial frame (d, n); the manifold's standard frame is used
    otherwise.
    """

    manifold: object
    x0: object
    dt: float
    n_paths: int
    stream: RngStream
    horizon: float
    two_sided: bool = False
    backward_horizon: float = None
    frame0: object = None
    nu: object = None

    def with_(self, **changes):
        return replace(self, **changes)

    def _per_path_doubles(self):
        m = self.manifold
        per_node = m.ambient_dim * (1 + m.dim) + 4 * m.dim
        steps = time_grid(self.horizon, self.dt)[1] + 1
        if self.two_sided:
            steps += time_grid(self.back, self.dt)[1] + 1
        return steps * per_node

    @property
    def back(self):
        return self.horizon if self.backward_horizon is None else self.backward_horizon

    def start(self, indices):
        if self.nu is None:
            x0 = np.asarray(self.x0, dtype=float)
            return np.broadcast_to(x0, (len(indices), x0.size)), self.frame0
        x0, _ = sample_initial(self.nu, self.manifold, self.stream, indices)
        return x0, None

    def sample(self, indices):
        indices = np.atleast_1d(indices)
        x0, frame0 = self.start(indices)
        if self.two_sided:
            return sample_two_sided(self.manifold, x0, self.horizon, self.dt, self.stream, indices,
                                    frame0=frame0, T_back=self.back)
        return sample_paths(self.manifold, x0, self.horizon, self.dt, self.stream, indices,
                            LEG_FORWARD, frame0)

    def map(self, func, n_paths=None):
        """Apply ``func(paths, indices) -> dict of per-path arrays`` chunk by chunk."""
        n = self.n_paths if n_paths is None else n_paths
        return ensemble_map(lambda idx: func(self.sample(idx), idx), n, self._per_path_doubles())

