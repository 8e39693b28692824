import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conelab import cli
from conelab.errors import ConelabError, ConfigError, PreconditionError
from conelab.field import GridDomain, RegionMask, ScalarField, lp_norm
from conelab.lab import checks, runner
from conelab.lab.checks import density_check, left_surrogate, normalize, w1delta_verify
from conelab.lab.config import SCHEMA, load_config, parse_config
from conelab.lab.fixtures import build_fixture
from conelab.operators import DegeneracyParams, RadialSolution, radial_solution
from conelab.storage import field_from_bytes


def _cfg(text, kind=None):
    return parse_config(text, kind)


class TestConfig:
    def test_defaults(self):
        cfg = _cfg("kind: verify")
        assert cfg.kind == "verify"
        for key, (_, default, _, _) in SCHEMA.items():
            if key != "kind":
                assert getattr(cfg, key) == default

    def test_values_and_comments(self):
        cfg = _cfg("# header\ngrid_n: 33  # points\ngamma: 2\nnested: false\n"
                   "seminorm_radii: [0.1, 1]\ntol_res: 1e-6\ncfl: 5E-1\n", "decay")
        assert cfg.tol_res == 1e-6 and cfg.cfl == 0.5
        assert cfg.kind == "decay" and cfg.grid_n == 33
        assert cfg.gamma == 2.0 and isinstance(cfg.gamma, float)
        assert cfg.nested is False and cfg.seminorm_radii == [0.1, 1.0]

    @pytest.mark.parametrize("text", [
        "kind: verify\nbogus: 1",
        "kind: verify\ngrid_n: 4",
        "kind: verify\ngrid_n: 3.5",
        "kind: verify\ngamma: -1",
        "kind: verify\ngamma: .nan",
        "kind: verify\ngamma: fast",
        "kind: verify\nnested: 1",
        "kind: verify\nfixture: sphere",
        "kind: verify\ngrid: {n: 5}",
        "kind: verify\nseminorm_radii: [a]",
        "kind: verify\ngrid_lo: 1\ngrid_hi: 0",
        "kind: verify\nlam: 2\nLam: 1",
        "kind: nothing",
        "grid_n: 9",
        "- a\n- b",
        "kind: [verify",
        "kind: verify\ncfl: 1.5",
        "kind: verify\nM: 1",
    ])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            _cfg(text)

    def test_kind_mismatch(self):
        with pytest.raises(ConfigError):
            _cfg("kind: verify", "decay")
        assert _cfg("", "decay").kind == "decay"

    def test_load(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("grid_n: 9\n", encoding="utf-8")
        assert load_config(p, "contact").grid_n == 9
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.yaml", "contact")

    def test_with_updates(self):
        cfg = _cfg("kind: verify")
        assert cfg.with_updates(seed=5).seed == 5 and cfg.seed == 0
        with pytest.raises(AttributeError):
            cfg.not_a_key


class TestNormalize:
    def test_zero_padded(self):
        d = GridDomain.box(-1.0, 1.0, 9)
        z = ScalarField.constant(d, 0.0)
        ut, ft, a = normalize(z, z, 1.0, 0.5, 1.0)
        assert a == 1.0
        assert np.all(ut.values == 0) and np.all(ft.values == 0)

    def test_sup_one(self):
        d = GridDomain.box(-1.0, 1.0, 9)
        u = ScalarField(d, np.cos(np.pi * d.coords()[..., 0]))
        ut, _, a = normalize(u, ScalarField.constant(d, 0.0), 1.0, 0.5)
        assert a == 16.0
        assert lp_norm(ut, math.inf, RegionMask.full(d)) == pytest.approx(1 / 16)

    @settings(max_examples=25)
    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 2.0), st.floats(0.05, 2.0),
           st.floats(0.0, 1.0))
    def test_random(self, seed, gamma, eps1, pad):
        rng = np.random.default_rng(seed)
        d = GridDomain.box(-1.0, 1.0, 9)
        u = ScalarField(d, rng.normal(size=d.shape))
        f = ScalarField(d, rng.normal(scale=5.0, size=d.shape))
        ut, ft, a = normalize(u, f, gamma, eps1, pad)
        full = RegionMask.full(d)
        assert lp_norm(ut, math.inf, full) <= 1 / 16 + 1e-15
        assert lp_norm(ft, d.dim, full) <= eps1 * (1 + 1e-12)
        np.testing.assert_allclose(ft.values * a ** (1 + gamma), f.values, rtol=1e-12)
        _, _, a2 = normalize(ut, ft, gamma, eps1, pad)
        assert a2 <= 1 + pad * 17 + 1e-12

    def test_vanishing_without_pad(self):
        d = GridDomain.box(-1.0, 1.0, 9)
        z = ScalarField.constant(d, 0.0)
        with pytest.raises(ConelabError):
            normalize(z, z, 1.0, 0.0)


class TestDensity:
    def test_zero(self):
        d = GridDomain.box(-2.0, 2.0, 33)
        z = ScalarField.constant(d, 0.0)
        frac, ok = density_check(z, z, 1.0, 1.0, RegionMask.ball(d, (0, 0), 1.0))
        assert frac == 1.0 and ok

    def test_scaled_radial(self):
        d = GridDomain.box(-2.0, 2.0, 33)
        params = DegeneracyParams(1.0, 1.0, 1.0)
        u, fp, _ = radial_solution(RadialSolution(1.0, params), d)
        u = u * (1 / (16 * lp_norm(u, math.inf, RegionMask.full(d))))
        f = ScalarField.constant(d, 1e-3 * fp)
        frac, _ = density_check(u, f, 1.0, 1.0, RegionMask.ball(d, (0, 0), 1.0))
        assert frac > 0

    def test_oscillation_precondition(self):
        d = GridDomain.box(-1.0, 1.0, 17)
        u = ScalarField(d, 0.5 * d.coords()[..., 0])
        with pytest.raises(PreconditionError):
            density_check(u, ScalarField.constant(d, 0.0), 1.0, 1.0, RegionMask.full(d))

    @pytest.mark.parametrize("fixture", ["zero", "affine", "quadratic", "radial", "cone", "solved"])
    def test_normalize_composes(self, fixture):
        cfg = _cfg(f"kind: density\ngrid_n: 17\nfixture: {fixture}\nfixture_c: -1\n"
                   "tol_res: 1e-6")
        fix = build_fixture(cfg)
        u, f, _ = normalize(fix.u, fix.f, cfg.gamma, cfg.eps1, 0.5)
        frac, _ = density_check(u, f, cfg.gamma, 1.0, RegionMask.ball(u.domain, (0, 0), 1.0))
        assert 0.0 <= frac <= 1.0


class TestW1Delta:
    def test_affine(self):
        d = GridDomain.box(-1.0, 1.0, 33)
        u = ScalarField(d, 0.3 * d.coords()[..., 0] - 0.1 * d.coords()[..., 1] + 0.05)
        rep = w1delta_verify(u, ScalarField.constant(d, 0.0), 1.0, 0.5,
                             RegionMask.ball(d, (0, 0), 0.5),
                             opening_kwargs={"K_min": 1.0, "k_max": 4})
        # the stress of an affine field is constant, so only its L^delta norm remains
        V = checks.stress_field(u, 1.0)
        assert rep.extras["left"] == pytest.approx(lp_norm(V, 0.5, RegionMask.ball(d, (0, 0), 0.5)))
        assert rep.extras["left"] <= rep.extras["right"]

    @settings(max_examples=20)
    @given(st.floats(0.05, 20.0), st.floats(0.0, 2.0))
    def test_scaling(self, a, gamma):
        d = GridDomain.box(-1.0, 1.0, 17)
        x = d.coords()
        u = ScalarField(d, np.sin(2 * x[..., 0]) * np.exp(x[..., 1]))
        ball = RegionMask.ball(d, (0, 0), 0.5)
        base = left_surrogate(u, gamma, 0.75, ball)
        scaled = left_surrogate(u * a, gamma, 0.75, ball)
        assert scaled == pytest.approx(a ** (1 + gamma) * base, rel=1e-10)

    def test_bad_inputs(self):
        d = GridDomain.box(-1.0, 1.0, 17)
        z = ScalarField.constant(d, 0.0)
        with pytest.raises(ConelabError):
            w1delta_verify(z, z, 1.0, 0.0, RegionMask.ball(d, (0, 0), 0.5))
        with pytest.raises(ConelabError):
            w1delta_verify(z, z, 1.0, 0.5, RegionMask.full(d))

    def test_censoring_precondition(self):
        d = GridDomain.box(-1.0, 1.0, 17)
        u = ScalarField(d, np.abs(d.coords()[..., 0]) ** 0.5)
        with pytest.raises(PreconditionError):
            w1delta_verify(u, ScalarField.constant(d, 0.0), 1.0, 0.5,
                           RegionMask.ball(d, (0, 0), 0.5),
                           opening_kwargs={"K_min": 0.01, "k_max": 1})


def _run(text, kind):
    return runner.run_experiment(_cfg(text, kind))


class TestRunner:
    def test_verify_suite(self, tmp_path):
        lines = []
        status = runner.execute(_cfg("samples: 200", "verify"), tmp_path, lines.append)
        assert status == runner.EXIT_OK
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["passed"] and summary["kind"] == "verify"
        tags = {c["provenance"] for c in summary["checks"]}
        assert tags <= {"paper", "trivial", "derived"} and len(tags) == 3
        assert len(lines) == len(summary["checks"]) + 1
        assert lines[-1].startswith("verify: passed")

    def test_decay_zero(self, tmp_path):
        status = runner.execute(_cfg("fixture: zero\ngrid_n: 17\nk_max: 4", "decay"), tmp_path,
                                lambda s: None)
        assert status == runner.EXIT_OK
        rows = (tmp_path / "decay.csv").read_text().splitlines()
        assert rows[0] == "k,t,measure,in_fit"
        assert all(r.split(",")[2] == "0.0" for r in rows[1:])

    def test_failed_check_exit(self, tmp_path):
        status = runner.execute(_cfg("grid_n: 17\nmax_iters: 1", "solve"), tmp_path,
                                lambda s: None)
        assert status == runner.EXIT_FAILED
        assert not json.loads((tmp_path / "summary.json").read_text())["passed"]

    def test_runtime_error_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        # the unnormalized radial fixture violates the oscillation precondition
        cfg = _cfg("grid_n: 17\nfixture: radial", "density")
        status = runner.execute(cfg, out, lambda s: None)
        assert status == runner.EXIT_ERROR
        assert not out.exists()

    def test_solve_outputs(self):
        rep, files = _run("grid_n: 17\ntol_res: 1e-6", "solve")
        assert rep.passed
        u = field_from_bytes(files["solution.fld"])
        assert u.domain.n_pts == (17, 17)
        header = files["solution.csv"].splitlines()[0]
        assert header == "x1,x2,u,f,flagged"

    def test_contact_outputs(self):
        rep, files = _run("grid_n: 17\nfixture: cone\nk_max: 4", "contact")
        assert rep.passed
        assert set(files) == {"contact.csv", "opening.csv", "kstar.fld", "summary.json"}
        assert files["opening.csv"].splitlines()[0] == "x1,x2,K_star,g,censored"

    def test_seminorm_outputs(self):
        rep, files = _run("grid_n: 33\nfixture: radial", "seminorm")
        assert rep.passed
        assert json.loads(files["summary.json"])["extras"]["evaluated"] > 0

    def test_density_normalized(self):
        rep, files = _run("grid_n: 33\nfixture: radial\nnormalize: true\neps_pad: 1", "density")
        assert rep.passed
        assert json.loads(files["summary.json"])["extras"]["normalization_factor"] > 1

    def test_decay_with_w1delta(self):
        rep, files = _run("grid_n: 33\ngrid_lo: -2\ngrid_hi: 2\nfixture: quadratic\n"
                          "fixture_c: -0.5\nk_max: 5\nw1delta: true\ndelta: 0.5", "decay")
        names = [c.name for c in rep.checks]
        assert "refinement drift" in names
        assert "w1delta" in json.loads(files["summary.json"])["extras"]

    def test_deterministic(self):
        text = "grid_n: 17\nfixture: solved\ntol_res: 1e-6\nk_max: 4"
        for kind in ("contact", "decay"):
            _, a = _run(text, kind)
            _, b = _run(text, kind)
            assert a == b


class TestCLI:
    def _config(self, tmp_path, text):
        p = tmp_path / "c.yaml"
        p.write_text(text, encoding="utf-8")
        return str(p)

    def test_unknown_key_exit_2(self, tmp_path, capsys):
        out = tmp_path / "out"
        status = cli.main(["verify", "--config", self._config(tmp_path, "bogus: 1"),
                           "--out", str(out)])
        assert status == 2 and not out.exists()
        assert "unknown keys" in capsys.readouterr().err

    def test_bad_seed(self, tmp_path):
        status = cli.main(["verify", "--config", self._config(tmp_path, ""), "--out",
                           str(tmp_path / "o"), "--seed", str(2 ** 64)])
        assert status == 2

    def test_seed_and_threads(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("CONELAB_THREADS", "1")
        cfgp = self._config(tmp_path, "samples: 100")
        status = cli.main(["verify", "--config", cfgp, "--out", str(tmp_path / "o"),
                           "--seed", "7", "--threads", "1"])
        assert status == 0
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["config"]["seed"] == 7
        assert "verify: passed" in capsys.readouterr().out

    def test_thread_sources(self, monkeypatch):
        monkeypatch.delenv("CONELAB_THREADS", raising=False)
        assert cli._threads(None) is None
        monkeypatch.setenv("CONELAB_THREADS", "3")
        assert cli._threads(None) == 3
        assert cli._threads(2) == 2
        monkeypatch.setenv("CONELAB_THREADS", "many")
        with pytest.raises(ConfigError):
            cli._threads(None)
        with pytest.raises(ConfigError):
            cli._set_threads(0)

    def test_bad_env_exit_2(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CONELAB_THREADS", "x")
        assert cli.main(["verify", "--config", self._config(tmp_path, ""),
                         "--out", str(tmp_path / "o")]) == 2

    def test_help_lists_schema(self):
        text = cli.build_parser().format_help()
        for key in SCHEMA:
            assert key in text

    def test_outputs_match_across_thread_counts(self, tmp_path):
        cfgp = self._config(tmp_path, "grid_n: 21\nfixture: solved\ntol_res: 1e-6\nk_max: 4\n")
        env = dict(os.environ, NUMBA_NUM_THREADS="4")
        outs = []
        for n in ("1", "4"):
            out = tmp_path / f"o{n}"
            subprocess.run([sys.executable, "-m", "conelab.cli", "contact", "--config", cfgp,
                            "--out", str(out), "--threads", n], env=env, check=True,
                           capture_output=True)
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outs[0] == outs[1]
