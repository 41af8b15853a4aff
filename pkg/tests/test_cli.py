"""Tests for settings, serialisation, run configuration and the CLI."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from core.config import Settings
from core.errors import DomainError
from core.models import CheckResult, RunConfig, SampledCurve, VerificationReport
from core.output import parse_csv, parse_json, read_curve, render_csv, render_json
from main import main


_DEFAULTS = Path(__file__).resolve().parent.parent / "config" / "defaults.yaml"


def _log(tmp_path):
    return ["--log-file", str(tmp_path / "logs" / "run.log")]


# ── Settings ────────────────────────────────────────────────────────


class TestSettings:
    def test_defaults(self):
        settings = Settings(env={})
        assert settings.tolerance("product_ode") == pytest.approx(1e-8)
        assert settings.grid("samples") == 2001
        assert settings.figure("figure1")["epsilon"] == pytest.approx(2.4)
        assert settings.figure_names == ["figure1", "figure2"]

    def test_tolerance_scale_from_environment(self):
        settings = Settings(env={"LAME_SUSY_TOL": "10"})
        assert settings.tolerance("product_ode") == pytest.approx(1e-7)

    @pytest.mark.parametrize("raw", ["abc", "-1", "0", "inf"])
    def test_bad_tolerance_scale(self, raw):
        with pytest.raises(DomainError):
            Settings(env={"LAME_SUSY_TOL": raw})

    def test_overlay_merges(self, tmp_path):
        overlay = tmp_path / "overlay.yaml"
        overlay.write_text("tolerances:\n  fit: 1.0e-5\ngrids:\n  samples: 11\n", encoding="utf-8")
        settings = Settings(overlay_path=overlay, env={})
        assert settings.tolerance("fit") == pytest.approx(1e-5)
        assert settings.tolerance("product_ode") == pytest.approx(1e-8)
        assert settings.grid("samples") == 11

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            Settings(config_path=tmp_path / "absent.yaml", env={})

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ValueError):
            Settings(config_path=path, env={})

    def test_every_section_is_consumed(self):
        raw = yaml.safe_load(_DEFAULTS.read_text(encoding="utf-8"))
        assert set(raw) == {"tolerances", "grids", "verify", "figures", "logging"}
        assert not hasattr(Settings(env={}), "pole_guard")

    def test_unknown_names(self):
        settings = Settings(env={})
        with pytest.raises(KeyError):
            settings.tolerance("nonexistent")
        with pytest.raises(DomainError):
            settings.figure("figure9")


# ── Models ──────────────────────────────────────────────────────────


class TestRunConfig:
    def test_valid(self):
        RunConfig(command="bloch", energy=1.0).validate()

    @pytest.mark.parametrize("kwargs", [
        {"samples": 1},
        {"x_min": 2.0, "x_max": 1.0},
        {"k2": 1.0},
        {"fmt": "xml"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            RunConfig(command="bloch", **kwargs).validate()

    def test_report_summary(self):
        report = VerificationReport(checks=[
            CheckResult("a", "ok", 1e-8, 1e-9),
            CheckResult("a", "bad", 1e-8, 1e-3),
            CheckResult("a", "nan", 1e-8, math.nan),
        ])
        assert report.summary() == {"checks": 3, "passed": 1, "failed": 2}

    def test_curve_length_mismatch(self):
        curve = SampledCurve(columns={"x": np.zeros(3), "y": np.zeros(4)})
        with pytest.raises(ValueError):
            curve.row_count()


# ── Output ──────────────────────────────────────────────────────────


class TestOutput:
    def _curve(self):
        rng = np.random.default_rng(2)
        return SampledCurve(
            columns={"x": rng.normal(size=17), "V": rng.normal(size=17) * 1e-7},
            metadata={"k2": 0.99, "points": [complex(-1.089, 0.0), 2.607 + 0.5j],
                      "model": [1, 1], "degenerate": np.bool_(False)},
        )

    def test_csv_roundtrip_is_exact(self):
        curve = self._curve()
        parsed = parse_csv(render_csv(curve))
        assert parsed.column_names == ["x", "V"]
        for name in curve.columns:
            assert np.array_equal(parsed.columns[name], curve.columns[name])
        assert parsed.metadata["points"] == [[-1.089, 0.0], [2.607, 0.5]]
        assert parsed.metadata["degenerate"] is False

    def test_json_roundtrip_is_exact(self):
        curve = self._curve()
        parsed = parse_json(render_json(curve))
        for name in curve.columns:
            assert np.array_equal(parsed.columns[name], curve.columns[name])
        assert parsed.metadata["model"] == [1, 1]

    def test_csv_layout(self):
        lines = render_csv(self._curve()).splitlines()
        assert lines[0].startswith("# k2: ")
        assert "x,V" in lines


# ── Command line ────────────────────────────────────────────────────


class TestMain:
    def test_band_edges(self, tmp_path):
        out = tmp_path / "edges.csv"
        main(["band-edges", "--m", "1", "--ell", "1", "--k2", "0.99", "-o", str(out),
              *_log(tmp_path)])
        curve = read_curve(str(out))
        assert curve.columns["analytic"] == pytest.approx([2.79, 3.19, 4.0], abs=1e-12)
        assert np.max(curve.columns["deviation"]) < 1e-6
        assert curve.metadata["normalization"]
        assert curve.metadata["version"]

    def test_unsupported_model_exit_code(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            main(["band-edges", "--m", "3", "--ell", "2", *_log(tmp_path)])
        assert info.value.code == 2
        assert "(1,1)" in capsys.readouterr().err

    def test_usage_error_exit_code(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["bloch", "--m", "1", *_log(tmp_path)])
        assert info.value.code == 1

    def test_bad_modulus_exit_code(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["band-edges", "--k2", "1.5", *_log(tmp_path)])
        assert info.value.code == 1

    def test_negative_lambda_exit_code(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            main(["partner", "--epsilon", "2.4", "--lambda", "-1", "--samples", "51",
                  *_log(tmp_path)])
        assert info.value.code == 3
        assert "node" in capsys.readouterr().err

    def test_bloch_metadata(self, tmp_path):
        out = tmp_path / "bloch.json"
        main(["bloch", "--energy", "2.4", "--samples", "101", "--format", "json",
              "-o", str(out), *_log(tmp_path)])
        curve = read_curve(str(out))
        assert {"x", "V", "psi1", "psi2", "wronskian"} <= set(curve.columns)
        assert "wronskian_im" not in curve.columns
        assert np.ptp(curve.columns["wronskian"]) < 1e-8 * np.max(np.abs(curve.columns["wronskian"]))
        points = sorted(p[0] for p in curve.metadata["points"])
        assert points == pytest.approx([-1.089, 2.607], abs=2e-3)
        assert curve.metadata["residual"] < 1e-8

    def test_bloch_inside_band_is_complex(self, tmp_path):
        out = tmp_path / "band.json"
        main(["bloch", "--energy", "3.0", "--samples", "101", "--format", "json",
              "-o", str(out), *_log(tmp_path)])
        curve = read_curve(str(out))
        assert {"psi1_re", "psi1_im", "psi2_re", "psi2_im"} <= set(curve.columns)
        assert np.max(np.abs(curve.columns["psi1_im"])) > 1e-3

    def test_bloch_partner_routes(self, tmp_path):
        out = tmp_path / "partner.csv"
        main(["partner", "--epsilon", "2.0", "--lambda", "inf", "--samples", "101",
              "-o", str(out), *_log(tmp_path)])
        curve = read_curve(str(out))
        assert np.max(curve.columns["deviation"]) < 1e-8
        assert curve.metadata["which"] == 2

    def test_figure(self, tmp_path):
        out = tmp_path / "figure2.json"
        main(["figure", "figure2", "--samples", "101", "--format", "json", "-o", str(out),
              *_log(tmp_path)])
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert set(payload["columns"]) == {"x", "V_gray", "V_black"}
        assert payload["metadata"]["point_deviation"] < 2e-3
        assert payload["metadata"]["bound_state"]["eigen_residual"] < 1e-6

    def test_verify_elliptic_suite(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        main(["verify", "--suite", "elliptic", "--format", "json", "-o", str(out),
              *_log(tmp_path)])
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["summary"]["failed"] == 0
        assert {c["suite"] for c in report["checks"]} == {"elliptic"}

    def test_verify_detects_injected_bug(self, tmp_path, capsys):
        overlay = tmp_path / "small.yaml"
        overlay.write_text("grids:\n  verify_energies: 6\n  band_scan: 300\n", encoding="utf-8")
        with pytest.raises(SystemExit) as info:
            main(["verify", "--suite", "solver", "--inject-bug", "--config", str(overlay),
                  *_log(tmp_path)])
        assert info.value.code == 4
        output = capsys.readouterr().out
        assert "FAIL  solver" in output
        assert "product equation" in output
