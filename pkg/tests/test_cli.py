import pytest

from graspcbf.cli import main

from helpers import fast_failure_text


def test_run_completed_writes_figures(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--out", str(out), "--duration", "0.02"]) == 0
    assert "termination: completed" in capsys.readouterr().out
    for name in ("run.csv", "friction.png", "contacts.png", "joints.png"):
        assert (out / name).is_file()


def test_run_grasp_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "fail.toml"
    cfg.write_text(fast_failure_text())
    code = main(["run", "--config", str(cfg), "--mode", "nominal_only", "--out",
                 str(tmp_path / "o"), "--duration", "2", "--no-figures"])
    assert code == 2
    assert "grasp_failure" in capsys.readouterr().out
    assert not (tmp_path / "o" / "friction.png").exists()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(fast_failure_text().replace("mu = 0.9", "mu = -1"))
    assert main(["validate", "--config", str(cfg)]) == 4
    err = capsys.readouterr().err
    assert "contact.mu" in err and "bad.toml:" in err
    assert main(["run", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path)]) == 4


def test_validate_canonical(capsys):
    assert main(["validate"]) == 0
    assert "3 contacts" in capsys.readouterr().out


def test_compare(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["run", "--out", str(tmp_path / name), "--duration", "0.01",
                     "--no-figures"]) == 0
    capsys.readouterr()
    assert main(["compare", "--a", str(tmp_path / "a" / "run.csv"),
                 "--b", str(tmp_path / "b" / "run.csv"), "--json"]) == 0
    assert '"max_abs_difference": 0.0' in capsys.readouterr().out


@pytest.mark.parametrize("argv", [["run", "--mode", "sideways", "--out", "x"], ["run"], []])
def test_usage_errors_do_not_look_like_grasp_failures(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1
