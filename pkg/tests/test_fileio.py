import numpy as np
import pytest

from holofield import DataError, OpticalConfig, Particle, ParticleField
from holofield.detect3d import Detection, PredictedParticle
from holofield.fileio import (
    read_detections_csv,
    read_gray8,
    read_jsonl,
    read_particles_csv,
    read_predictions_csv,
    read_raw_plane,
    write_detections_csv,
    write_gray8,
    write_jsonl,
    write_particles_csv,
    write_predictions_csv,
    write_raw_plane,
)


class TestGray8:
    @pytest.mark.parametrize("name", ["img.png", "img.pgm"])
    def test_round_trip(self, tmp_path, rng, name):
        img = rng.integers(0, 256, (17, 23)).astype(np.uint8)
        write_gray8(tmp_path / name, img)
        assert np.array_equal(read_gray8(tmp_path / name), img)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            read_gray8(tmp_path / "nope.png")

    def test_corrupt_file(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not an image at all")
        with pytest.raises(DataError, match="cannot read"):
            read_gray8(bad)


class TestRawPlane:
    def test_round_trip_with_sidecar(self, tmp_path, rng):
        cfg = OpticalConfig(nx=24, ny=16)
        plane = rng.uniform(0, 2, (16, 24))
        write_raw_plane(tmp_path / "p.f32", plane, z=12_345.6, cfg=cfg)
        data, header = read_raw_plane(tmp_path / "p.f32")
        assert data.shape == (16, 24)
        assert np.allclose(data, plane, atol=1e-6)  # float32 storage
        assert header["cfg_hash"] == cfg.config_hash()
        assert float(header["z_um"]) == 12_345.6

    def test_missing_sidecar(self, tmp_path):
        np.zeros(4, dtype="<f4").tofile(tmp_path / "p.f32")
        with pytest.raises(DataError, match="sidecar"):
            read_raw_plane(tmp_path / "p.f32")

    def test_truncated_payload(self, tmp_path):
        cfg = OpticalConfig(nx=24, ny=16)
        write_raw_plane(tmp_path / "p.f32", np.zeros((16, 24)), z=0.0, cfg=cfg)
        (tmp_path / "p.f32").write_bytes(b"\x00" * 40)
        with pytest.raises(DataError, match="truncated"):
            read_raw_plane(tmp_path / "p.f32")


class TestParticleCsv:
    def test_round_trip(self, tmp_path):
        fields = [
            ParticleField(0, [Particle(1.5, 2.25, 30_000.125, 12.5)]),
            ParticleField(3, [Particle(10.0, 20.0, 50_000.0, 8.0), Particle(1.0, 2.0, 99_000.0, 6.0)]),
        ]
        write_particles_csv(tmp_path / "t.csv", fields)
        out = read_particles_csv(tmp_path / "t.csv")
        assert sorted(out) == [0, 3]
        assert out[3].particles == fields[1].particles
        assert out[0].particles[0].z == 30_000.125

    def test_missing_columns(self, tmp_path):
        (tmp_path / "t.csv").write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="columns"):
            read_particles_csv(tmp_path / "t.csv")

    def test_malformed_row_reports_line(self, tmp_path):
        (tmp_path / "t.csv").write_text("hid,x_um,y_um,z_um,d_um\n0,1,2,3,oops\n")
        with pytest.raises(DataError, match="t.csv:2"):
            read_particles_csv(tmp_path / "t.csv")


class TestPredictionCsv:
    def test_round_trip(self, tmp_path):
        rows = [
            (0, PredictedParticle(1.0, 2.0, 3.0, 4.0, n_members=3, assigned=True)),
            (1, PredictedParticle(9.25, 8.5, 7.125, 6.0625, n_members=1, assigned=False)),
        ]
        write_predictions_csv(tmp_path / "p.csv", rows)
        out = read_predictions_csv(tmp_path / "p.csv")
        assert out[0][0] == rows[0][1]
        assert out[1][0] == rows[1][1]

    def test_empty_predictions_header_only(self, tmp_path):
        write_predictions_csv(tmp_path / "p.csv", [])
        text = (tmp_path / "p.csv").read_text().strip().splitlines()
        assert text == ["hid,x_um,y_um,z_um,d_um,n_members,assigned"]
        assert read_predictions_csv(tmp_path / "p.csv") == {}


class TestDetectionCsv:
    def test_round_trip(self, tmp_path):
        rows = [(2, Detection(1.0, 2.0, 3.0, 4.0, plane_index=17, pixel_count=9))]
        write_detections_csv(tmp_path / "d.csv", rows)
        out = read_detections_csv(tmp_path / "d.csv")
        assert out[2][0] == rows[0][1]


class TestJsonl:
    def test_round_trip(self, tmp_path):
        records = [{"a": 1}, {"b": [1, 2, 3]}]
        write_jsonl(tmp_path / "m.jsonl", records)
        assert read_jsonl(tmp_path / "m.jsonl") == records

    def test_malformed_line_reports_position(self, tmp_path):
        (tmp_path / "m.jsonl").write_text('{"ok": 1}\n{oops\n')
        with pytest.raises(DataError, match="m.jsonl:2"):
            read_jsonl(tmp_path / "m.jsonl")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            read_jsonl(tmp_path / "nope.jsonl")
