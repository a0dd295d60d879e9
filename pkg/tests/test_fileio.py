import numpy as np
import pytest

from irlsreg.fileio import PgmError, load_vector, read_config, read_pgm, save_vector, write_pgm


class TestVectors:
    def test_roundtrip_exact(self, tmp_path, rng):
        v = rng.standard_normal(17) * 1e-7
        save_vector(v, tmp_path / "v.txt")
        np.testing.assert_array_equal(load_vector(tmp_path / "v.txt"), v)

    def test_single_value(self, tmp_path):
        save_vector([2.5], tmp_path / "v.txt")
        assert load_vector(tmp_path / "v.txt").shape == (1,)


class TestPgm:
    def test_roundtrip(self, tmp_path, rng):
        img = np.rint(rng.uniform(0, 1, (5, 7)) * 255) / 255
        write_pgm(img, tmp_path / "a.pgm")
        back = read_pgm(tmp_path / "a.pgm")
        assert back.shape == (5, 7)
        np.testing.assert_allclose(back, img, atol=1e-12)

    def test_plain_format_and_clamping(self, tmp_path):
        write_pgm(np.array([[-0.5, 0.5], [1.0, 3.0]]), tmp_path / "c.pgm")
        lines = (tmp_path / "c.pgm").read_text().splitlines()
        assert lines[:3] == ["P2", "2 2", "255"]
        assert lines[3:] == ["0 128", "255 255"]

    def test_binary_and_comments(self, tmp_path):
        path = tmp_path / "b.pgm"
        path.write_bytes(b"P5\n# made by hand\n3 1\n# max\n200\n" + bytes([0, 100, 200]))
        np.testing.assert_allclose(read_pgm(path), [[0.0, 0.5, 1.0]])

    @pytest.mark.parametrize("content", [b"P3\n1 1\n255\n0\n", b"P2\n2 2\n255\n1 2 3\n",
                                         b"P2\n1 1\n255\n300\n", b"P2\n1", b"P2\nx 1\n255\n0\n"])
    def test_malformed(self, tmp_path, content):
        path = tmp_path / "bad.pgm"
        path.write_bytes(content)
        with pytest.raises(PgmError):
            read_pgm(path)


class TestConfig:
    def test_parse(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\nm = 50\n\nper-stage-iters=20  # trailing\nsolvers = IRLS, ISTA\n")
        assert read_config(path) == {"m": "50", "per_stage_iters": "20", "solvers": "IRLS, ISTA"}

    @pytest.mark.parametrize("line", ["novalue\n", " = 3\n"])
    def test_malformed(self, tmp_path, line):
        path = tmp_path / "c.cfg"
        path.write_text(line)
        with pytest.raises(ValueError):
            read_config(path)
