import json
import math
import textwrap
from pathlib import Path

import numpy as np
import pytest

from stochdd.cli.config import parse_config
from stochdd.cli.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from stochdd.cli.scenarios import LeakageWarning, build_setup
from stochdd.errors import ConfigError
from stochdd.operators import boson_ladder, number_operator, BosonicSpace, pauli, tensor

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

TWO_QUBIT = """
[scenario]
name = two_qubit
omega = 1.0
g = 0.1
t = 10.0
initial = {initial}

[noise]
gamma_t = {gamma_t}
B = {B}

[scheme]
pulses = Z@1

[sweep]
N = 2, 8, 32

[run]
trials = {trials}
master_seed = 7
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def two_qubit(tmp_path, initial="superposition", gamma_t="0, 50", B="YY", trials=40):
    return write(tmp_path, TWO_QUBIT.format(initial=initial, gamma_t=gamma_t, B=B, trials=trials))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_body(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return lines[0].split(","), np.array([[float(v) for v in l.split(",")] for l in lines[1:]])


# ----------------------------------------------------------- config grammar


def test_config_lists_and_constants():
    cfg = parse_config(
        "[scenario]\nname = two_qubit\nomega = pi\n[sweep]\nN = 2, 4\ngamma_t = 0:1:5  # comment\n"
    )
    assert cfg.scenario.float("omega") == math.pi
    assert cfg.sweep.ints("N") == [2, 4]
    assert cfg.sweep.floats("gamma_t") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert cfg.trials == 1 and cfg.master_seed == 0 and cfg.threads == 1


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[scenario]\nname = qutrit\n", "[scenario] name"),
        ("[scenario]\nname = two_qubit\n[extra]\n", "unknown section"),
        ("[scenario]\nname = two_qubit\n[run]\ntrials = 0\n", "[run] trials"),
        ("[scenario]\nname = two_qubit\n[run]\ntrials = many\n", "[run] trials: expected an integer"),
        ("[scenario]\nname = two_qubit\n[run]\nmaster_seed = 18446744073709551616\n", "[run] master_seed"),
        ("no header\n", "malformed config"),
    ],
)
def test_config_errors_name_the_field(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


@pytest.mark.parametrize(
    "edit, fragment",
    [
        (("omega = 1.0", "omega = fast"), "[scenario] omega: expected a number"),
        (("g = 0.1\n", ""), "[scenario] g: missing"),
        (("B = YY", "B = YQ"), "[noise] B"),
        (("pulses = Z@1", "pulses = Z@3"), "[scheme] pulses: site 3"),
        (("pulses = Z@1", "pulses = W@1"), "[scheme] pulses: cannot parse"),
        (("pulses = Z@1", "pulses = parity(pi)@1"), "[scheme] pulses: parity"),
    ],
)
def test_scenario_errors_name_the_field(tmp_path, edit, fragment):
    text = TWO_QUBIT.format(initial="eigenstate", gamma_t="0", B="YY", trials=1).replace(*edit)
    with pytest.raises(ConfigError) as info:
        build_setup(parse_config(text))
    assert fragment in str(info.value)


def test_oscillator_leakage_warning():
    text = "[scenario]\nname = oscillator\nD = 4\nomega_a = 1\nomega_b = 1\ng = 0\nalpha = 1.5\n[scheme]\npulses = parity(pi)@1\n"
    with pytest.warns(LeakageWarning):
        build_setup(parse_config(text))


# --------------------------------------------------------------- exit codes


def test_exit_code_for_config_errors(tmp_path, capsys):
    code, out, err = run(capsys, "sweep-pulses", "--config", str(tmp_path / "missing.ini"))
    assert code == EXIT_CONFIG and out == "" and "cannot read config" in err
    bad = write(tmp_path, "[scenario]\nname = two_qubit\nomega = x\ng = 0\n[scheme]\npulses = Z@1\n[noise]\nB = ZZ\ngamma = 0\n")
    code, _, err = run(capsys, "limits", "--config", bad)
    assert code == EXIT_CONFIG and "[scenario] omega" in err
    code, _, err = run(capsys, "sweep-pulses", "--config", two_qubit(tmp_path), "--trials", "0")
    assert code == EXIT_CONFIG and "--trials" in err


def test_exit_code_for_numerical_failure(tmp_path, capsys):
    path = write(
        tmp_path,
        """
        [scenario]
        name = two_qubit
        omega = 1.0
        g = 0.1
        [noise]
        gamma = 1.0
        B = YY
        [scheme]
        pulses = Z@1
        [sweep]
        gamma_t = 0, 2
        steps_per_unit = 4
        tolerance = 0
        max_refinements = 1
        [run]
        trials = 4
        """,
    )
    code, out, err = run(capsys, "trajectories", "--config", path)
    assert code == EXIT_NUMERICAL and out == "" and "numerical failure" in err


def test_bounds_rejects_unsupported_cycle(tmp_path, capsys):
    text = TWO_QUBIT.format(initial="eigenstate", gamma_t="1", B="YY", trials=2).replace("Z@1", "X@1, Y@1, X@1")
    code, _, err = run(capsys, "bounds", "--config", write(tmp_path, text))
    assert code == EXIT_CONFIG


# --------------------------------------------------------------- subcommands


def test_limits_two_qubit_report(capsys):
    code, out, _ = run(capsys, "limits", "--config", str(CONFIGS / "two_qubit_limits.ini"))
    assert code == EXIT_OK
    rep = json.loads(out)["limits"]
    h = np.array(rep["effective_hamiltonian"]["real"]) + 1j * np.array(rep["effective_hamiltonian"]["imag"])
    z, i = pauli("Z"), pauli("I")
    assert np.allclose(h, 0.5 * (tensor([z, i]) + tensor([i, z])), atol=1e-12)
    assert not rep["effective_error_is_zero"] and rep["commutator_norm_B_U"] < 1e-12


def test_limits_spin_bath_and_oscillator(tmp_path, capsys):
    code, out, _ = run(capsys, "limits", "--config", str(CONFIGS / "fig6_spin_bath_xz.ini"))
    assert code == EXIT_OK
    rep = json.loads(out)["limits"]
    assert rep["effective_error_is_zero"]
    code, out, _ = run(capsys, "limits", "--config", str(CONFIGS / "oscillator.ini"))
    assert code == EXIT_OK
    rep = json.loads(out)["limits"]
    b = np.array(rep["effective_error"]["real"]) + 1j * np.array(rep["effective_error"]["imag"])
    D = 12
    n = np.kron(number_operator(BosonicSpace(D)), np.eye(D))
    assert np.allclose(b, n, atol=1e-10)


def test_sweep_schema_and_gamma_zero_seed_independence(tmp_path, capsys):
    path = two_qubit(tmp_path, gamma_t="0")
    code, a, _ = run(capsys, "sweep-pulses", "--config", path, "--seed", "1")
    _, b, _ = run(capsys, "sweep-pulses", "--config", path, "--seed", "2")
    assert code == EXIT_OK
    assert a.startswith("# tool: stochdd ")
    assert "timestamp" not in a and "# master_seed: 1\n" in a
    cols, va = csv_body(a)
    _, vb = csv_body(b)
    assert cols[:5] == ["N", "mean_fidelity", "std_fidelity", "trials", "seed"]
    numeric = [cols.index(c) for c in ("N", "mean_fidelity", "std_fidelity", "trials")]
    assert np.array_equal(va[:, numeric], vb[:, numeric])
    assert np.all(va[:, 2] < 1e-12)


def test_sweep_writes_file_and_is_deterministic(tmp_path, capsys):
    path = two_qubit(tmp_path, gamma_t="0, 50", trials=70)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "sweep-pulses", "--config", path, "--out", str(out1), "--threads", "1")[0] == EXIT_OK
    assert run(capsys, "sweep-pulses", "--config", path, "--out", str(out2), "--threads", "4")[0] == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    cols, v = csv_body(out1.read_text())
    assert np.all((v[:, 1] >= 0) & (v[:, 1] <= 1)) and np.all(v[:, 2] >= 0)


def test_trajectories_without_noise(tmp_path, capsys):
    path = write(
        tmp_path,
        """
        [scenario]
        name = two_qubit
        omega = 1.0
        g = 0.1
        initial = eigenstate
        [noise]
        gamma = 0
        B = YY
        [scheme]
        pulses = Z@1
        [sweep]
        times = 0, 1, 2
        [run]
        trials = 3
        """,
    )
    code, out, _ = run(capsys, "trajectories", "--config", path)
    assert code == EXIT_OK
    cols, v = csv_body(out)
    for name in ("mean_F", "analytic_F", "single_realization_F"):
        assert np.allclose(v[:, cols.index(name)], 1.0, atol=1e-12)
    assert np.all(v[:, cols.index("std_F")] < 1e-12)


def test_bounds_table(tmp_path, capsys):
    path = two_qubit(tmp_path, initial="eigenstate", gamma_t="0, 5", trials=30)
    text = Path(path).read_text().replace("N = 2, 8, 32", "N = 16, 32")
    Path(path).write_text(text)
    code, out, _ = run(capsys, "bounds", "--config", path)
    assert code == EXIT_OK
    cols, v = csv_body(out)
    assert cols[:5] == ["N", "bound", "empirical_mean", "empirical_std", "slack"]
    assert np.all(v[:, cols.index("slack")] > 0)
    for gt in (0.0, 5.0):
        rows = v[v[:, cols.index("gamma_t")] == gt]
        assert rows[0, 1] > rows[1, 1]
