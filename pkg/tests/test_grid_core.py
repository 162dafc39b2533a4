import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdfweave.grid_core import (
    ColorGrid3,
    Grid3,
    GridFormatError,
    GridHeader,
    ScalarGrid3,
    VectorGrid3,
    gradient_central,
    gradient_grid,
    grid_to_world,
    read_grid,
    sample_trilinear,
    world_to_grid,
    write_grid,
)
from sdfweave.synthetic import sphere_sdf, voxel_centers


def make_header(dims=(4, 4, 4), origin=(0.0, 0.0, 0.0), h=0.5, channels=1):
    return GridHeader(dims=dims, origin=origin, voxel_size=h, channels=channels)


class TestHeader:
    def test_rejects_thin_axis(self):
        with pytest.raises(ValueError):
            make_header(dims=(1, 4, 4))

    def test_rejects_bad_voxel_size(self):
        with pytest.raises(ValueError):
            make_header(h=0.0)
        with pytest.raises(ValueError):
            make_header(h=float("nan"))

    def test_channel_check(self):
        with pytest.raises(ValueError):
            ScalarGrid3.zeros(make_header(channels=4))
        VectorGrid3.zeros(make_header(channels=4))
        ColorGrid3.zeros(make_header(channels=4))


class TestWorldGrid:
    def test_origin_maps_to_zero(self):
        hd = make_header(origin=(1.0, -2.0, 3.0))
        assert np.allclose(world_to_grid((1.0, -2.0, 3.0), hd), (0, 0, 0))

    def test_one_voxel_offset(self):
        hd = make_header(origin=(1.0, 0.0, 0.0), h=0.25)
        assert np.allclose(world_to_grid((1.25, 0.0, 0.0), hd), (1, 0, 0))

    def test_linearity(self):
        hd = make_header(h=0.2)
        g = world_to_grid(np.array([0.2 * 2.5, 0.2 * 0.5, 0.0]), hd)
        assert np.allclose(g, (2.5, 0.5, 0.0))

    def test_round_trip_far_coordinates(self):
        hd = make_header(origin=(0.3, -1.7, 2.2), h=0.01)
        rng = np.random.default_rng(7)
        g = rng.uniform(-1e6, 1e6, size=(100, 3))
        back = world_to_grid(grid_to_world(g, hd), hd)
        assert np.max(np.abs(back - g) / np.maximum(np.abs(g), 1.0)) < 1e-6


class TestTrilinear:
    def test_exact_at_voxel_centers(self):
        rng = np.random.default_rng(0)
        grid = ScalarGrid3(make_header(), rng.standard_normal((4, 4, 4)).astype(np.float32))
        assert sample_trilinear(grid, (2, 1, 3)) == grid.values[2, 1, 3]

    def test_constant_field(self):
        grid = ScalarGrid3(make_header(), np.full((4, 4, 4), 7.5, dtype=np.float32))
        assert sample_trilinear(grid, (1.3, 2.7, 0.1)) == pytest.approx(7.5)

    def test_linear_field_quarter(self):
        vals = np.zeros((2, 2, 2), dtype=np.float32)
        vals[1, :, :] = 1.0
        grid = ScalarGrid3(make_header(dims=(2, 2, 2)), vals)
        assert sample_trilinear(grid, (0.25, 0.0, 0.0)) == pytest.approx(0.25)

    def test_out_of_bounds_clamps(self):
        vals = np.zeros((2, 2, 2), dtype=np.float32)
        vals[1, :, :] = 1.0
        grid = ScalarGrid3(make_header(dims=(2, 2, 2)), vals)
        assert sample_trilinear(grid, (5.0, 0.0, 0.0)) == pytest.approx(1.0)
        assert sample_trilinear(grid, (-3.0, 0.0, 0.0)) == pytest.approx(0.0)

    def test_affine_field_reproduced_everywhere(self):
        hd = make_header(dims=(5, 6, 7), origin=(-0.3, 0.1, 0.4), h=0.21)
        a = np.array([0.7, -1.3, 0.4])
        b = 0.23
        vals = (voxel_centers(hd) @ a + b).astype(np.float32)
        grid = ScalarGrid3(hd, vals)
        rng = np.random.default_rng(1)
        g = rng.uniform(0, np.array(hd.dims) - 1, size=(200, 3))
        got = sample_trilinear(grid, g)
        want = grid_to_world(g, hd) @ a + b
        assert np.max(np.abs(got - want)) < 1e-5

    def test_multichannel(self):
        hd = make_header(channels=4)
        vals = np.zeros((4, 4, 4, 4), dtype=np.float32)
        vals[..., 1] = 2.0
        grid = VectorGrid3(hd, vals)
        out = sample_trilinear(grid, (1.5, 1.5, 1.5))
        assert out.shape == (4,)
        assert np.allclose(out, (0, 2, 0, 0))


class TestGradient:
    def test_linear_ramp(self):
        hd = make_header(h=0.5)
        vals = (voxel_centers(hd)[..., 0]).astype(np.float32)  # phi = x
        grid = ScalarGrid3(hd, vals)
        assert np.allclose(gradient_central(grid, (2, 2, 2)), (1, 0, 0))

    def test_constant(self):
        grid = ScalarGrid3(make_header(), np.full((4, 4, 4), 3.0, dtype=np.float32))
        assert np.allclose(gradient_central(grid, (1, 1, 1)), (0, 0, 0))

    def test_affine_exact_everywhere(self):
        hd = make_header(dims=(6, 5, 7), h=0.13, origin=(0.2, -0.4, 0.9))
        a = np.array([1.4, -0.6, 2.2])
        vals = (voxel_centers(hd) @ a + 0.37).astype(np.float64)
        grid = ScalarGrid3(hd, vals)
        g = gradient_grid(grid)
        assert np.max(np.abs(g - a)) < 1e-10  # one-sided is exact on affine too

    def test_boundary_one_sided_matches_pointwise(self):
        rng = np.random.default_rng(3)
        grid = ScalarGrid3(make_header(), rng.standard_normal((4, 4, 4)).astype(np.float32))
        full = gradient_grid(grid)
        for idx in [(0, 0, 0), (3, 3, 3), (0, 2, 3), (2, 0, 1), (1, 2, 0), (2, 2, 2)]:
            assert np.allclose(gradient_central(grid, idx), full[idx])

    def test_sphere_gradient_vs_analytic(self):
        # oracle: grad of ||p-c|| - r is (p-c)/||p-c||
        center = np.array([0.01, -0.02, 0.005])
        r = 0.4
        grid = sphere_sdf(radius=r, center=center, resolution=48)
        h = grid.header.voxel_size
        assert h <= r / 16
        p = voxel_centers(grid.header)
        d = np.linalg.norm(p - center, axis=-1)
        interior = np.zeros(grid.header.dims, dtype=bool)
        interior[1:-1, 1:-1, 1:-1] = True
        mask = interior & (d >= 2 * h)
        g = gradient_grid(grid)[mask]
        analytic = ((p - center) / d[..., None])[mask]
        err = np.linalg.norm(g - analytic, axis=-1)
        # truncation of the central stencil on ||p-c|| is ~0.32*(h/d)^2:
        # ~0.08 at d=2h independent of h, below 0.01 once d >= 6h
        assert err.max() < 0.08
        unit = g / np.linalg.norm(g, axis=-1, keepdims=True)
        assert np.all(np.sum(unit * analytic, axis=-1) > 0.9)
        far = d[mask] >= 6 * h
        assert err[far].max() < 0.01


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        vals = rng.standard_normal((3, 4, 5)).astype(np.float32)
        vals[0, 0, 0] = -0.0
        grid = ScalarGrid3(
            GridHeader(dims=(3, 4, 5), origin=(0.5, -1.0, 2.0), voxel_size=0.125), vals
        )
        path = tmp_path / "g.dwgrid"
        write_grid(grid, path)
        back = read_grid(path, ScalarGrid3)
        assert back.header == grid.header
        assert back.values.tobytes() == vals.tobytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.dwgrid"
        grid = ScalarGrid3.zeros(make_header(dims=(2, 2, 2)))
        write_grid(grid, path)
        raw = bytearray(path.read_bytes())
        raw[:2] = b"XX"
        path.write_bytes(bytes(raw))
        with pytest.raises(GridFormatError, match="magic"):
            read_grid(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.dwgrid"
        write_grid(ScalarGrid3.zeros(make_header(dims=(2, 2, 2))), path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(GridFormatError, match="payload"):
            read_grid(path)

    def test_non_finite_header(self, tmp_path):
        path = tmp_path / "nan.dwgrid"
        write_grid(ScalarGrid3.zeros(make_header(dims=(2, 2, 2))), path)
        raw = bytearray(path.read_bytes())
        # voxel_size field sits after magic(8) + 4*u32 + 3*f32
        import struct

        struct.pack_into("<f", raw, 8 + 16 + 12, float("nan"))
        path.write_bytes(bytes(raw))
        with pytest.raises(GridFormatError, match="header"):
            read_grid(path)

    def test_file_size_2x2x2_scalar(self, tmp_path):
        # 8 magic + 16 dims/channels + 16 origin/voxel_size + 2*2*2*4 payload
        path = tmp_path / "size.dwgrid"
        write_grid(ScalarGrid3.zeros(make_header(dims=(2, 2, 2))), path)
        assert path.stat().st_size == 72

    def test_linear_order_is_x_fastest(self, tmp_path):
        vals = np.arange(8, dtype=np.float32).reshape(2, 2, 2)  # vals[x,y,z]
        grid = ScalarGrid3(make_header(dims=(2, 2, 2)), vals)
        path = tmp_path / "order.dwgrid"
        write_grid(grid, path)
        payload = np.frombuffer(path.read_bytes()[40:], dtype="<f4")
        # index = x + 2*(y + 2*z): payload[1] must be vals[1,0,0]
        assert payload[1] == vals[1, 0, 0]
        assert payload[2] == vals[0, 1, 0]
        assert payload[4] == vals[0, 0, 1]

    @settings(max_examples=25, deadline=None)
    @given(
        dims=st.tuples(*[st.integers(2, 5)] * 3),
        channels=st.sampled_from([1, 3, 4]),
        seed=st.integers(0, 2**16),
    )
    def test_round_trip_randomized(self, tmp_path_factory, dims, channels, seed):
        rng = np.random.default_rng(seed)
        shape = dims if channels == 1 else (*dims, channels)
        vals = rng.standard_normal(shape).astype(np.float32)
        vals.flat[rng.integers(0, vals.size)] = -0.0
        # header fields are stored as f32 in the file; use representable values
        origin = tuple(float(v) for v in rng.uniform(-2, 2, 3).astype(np.float32))
        hd = GridHeader(dims=dims, origin=origin,
                        voxel_size=float(np.float32(rng.uniform(0.01, 2.0))),
                        channels=channels)
        grid = Grid3(hd, vals)
        path = tmp_path_factory.mktemp("grids") / "rt.dwgrid"
        write_grid(grid, path)
        back = read_grid(path)
        assert back.values.tobytes() == vals.tobytes()
        assert back.header == hd
