"""
Tests for the scale-by-scale coloring and the torus embedding
"""
import numpy as np
import pytest

from src.embedding.assouad import (
    color_stage, distortion_report, embed_cloud, normalize_diameter, phi_coordinate, phi_matrix
)
from src.errors import NormalizationError, ValidationRejected
from src.metric.models import PointCloud


class TestColoring:
    def test_close_net_points_get_distinct_colors(self, square_cloud):
        stage = color_stage(square_cloud, 3)
        members = list(stage.net.members)
        D = square_cloud.block(members, members)
        close = (D <= 8 * stage.eps) & ~np.eye(len(members), dtype=bool)
        a, b = np.nonzero(close)
        assert np.all(stage.colors[a] != stage.colors[b])
        assert stage.colors.max() < stage.palette_size

    def test_phi_coordinate_matches_matrix(self, square_cloud):
        stage = color_stage(square_cloud, 2)
        phi = phi_matrix(square_cloud, stage)
        for x in (0, 17, 199):
            for j in range(stage.palette_size):
                assert phi_coordinate(square_cloud, x, stage, j) == phi[x, j]
        assert np.all(phi <= 1.5 * stage.eps)

    def test_phi_coordinate_outside_palette(self, square_cloud):
        stage = color_stage(square_cloud, 1)
        with pytest.raises(ValidationRejected):
            phi_coordinate(square_cloud, 0, stage, stage.palette_size)


class TestEmbedding:
    def test_distortion_bounds_on_square_sample(self, square_cloud):
        emb = embed_cloud(square_cloud, 0, 8, workers=2)
        report = distortion_report(square_cloud, emb, workers=2)
        assert report.pairs == 200 * 199 // 2
        assert report.banded_pairs > 0
        assert report.lipschitz_ok
        assert report.band_ok
        assert report.phi1_ok
        assert report.phi2_ok
        assert report.lipschitz_violations == 0
        assert report.max_ratio <= 1 / 3 + 1e-12
        assert report.min_band_ratio >= 1 / 30

    def test_lipschitz_check_is_exact(self):
        cloud = PointCloud.from_points([[0.0], [0.5]])
        emb = embed_cloud(cloud, 0, 2)
        emb.images[:] = 0.0
        emb.images[1, 0] = np.nextafter(0.5 / 3.0, 1.0)
        report = distortion_report(cloud, emb)
        assert report.lipschitz_violations == 1
        assert not report.lipschitz_ok

    def test_schedule_matches_stages(self, square_cloud):
        emb = embed_cloud(square_cloud, 2, 5)
        assert emb.schedule.counts[:2] == (0, 0)
        assert emb.schedule.counts[2:] == tuple(stage.palette_size for stage in emb.stages)
        assert emb.images.shape == (200, emb.schedule.K)
        assert np.all(emb.images >= 0) and np.all(emb.images < 1)

    def test_single_point(self):
        cloud = PointCloud.from_points([[0.2, 0.4]])
        emb = embed_cloud(cloud, 0, 3)
        assert emb.schedule.K == 4
        report = distortion_report(cloud, emb)
        assert report.pairs == 0
        assert report.lipschitz_ok and report.band_ok

    def test_requires_normalized_diameter(self):
        cloud = PointCloud.from_points([0.0, 2.0])
        with pytest.raises(NormalizationError):
            embed_cloud(cloud, 0, 3)
        assert normalize_diameter(cloud).diameter <= 1.0

    def test_bad_scale_range(self, square_cloud):
        with pytest.raises(ValidationRejected):
            embed_cloud(square_cloud, 4, 2)

    def test_matrix_cloud(self):
        cloud = PointCloud.from_matrix([[0, 0.5, 1], [0.5, 0, 0.5], [1, 0.5, 0]])
        report = distortion_report(cloud, embed_cloud(cloud, 0, 4))
        assert report.lipschitz_ok
        assert report.band_ok
