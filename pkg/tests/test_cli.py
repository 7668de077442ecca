"""End-to-end tests for the command line: text output, JSON shape, exit codes."""

import json

import numpy as np

from su2ipt import bridge, cli, su2, tensors


def run(capsys, argv):
    code = cli.run(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def lines(out):
    return out.rstrip("\n").split("\n")


def test_theta_single_prints_exact_value(capsys):
    code, out, _ = run(capsys, ["theta", "--path", "1/2,0"])
    assert code == 0
    assert lines(out) == ["config: command=theta path=1/2,0 path2=None", "2"]


def test_theta_pair_is_orthogonality_aware(capsys):
    code, out, _ = run(
        capsys, ["theta", "--path", "1/2,1,1/2", "--path2", "1/2,1,1/2"]
    )
    assert code == 0
    assert lines(out)[-1] == "3"
    # different intermediate spins contract to zero
    code, out, _ = run(
        capsys, ["theta", "--path", "1/2,1,1/2", "--path2", "1/2,0,1/2"]
    )
    assert code == 0
    assert lines(out)[-1] == "0"


def test_decimal_spin_token_is_usage_error(capsys):
    code, _, err = run(capsys, ["theta", "--path", "0.5"])
    assert code == 2
    assert "bad spin '0.5' at position 1" in err


def test_empty_spin_list_is_usage_error(capsys):
    code, _, err = run(capsys, ["theta", "--path", ""])
    assert code == 2
    assert "empty spin list (position 1)" in err


def test_bad_token_position_is_reported(capsys):
    code, _, err = run(capsys, ["theta", "--path", "1/2,x,1/2"])
    assert code == 2
    assert "at position 2" in err


def test_unknown_command_is_usage_error(capsys):
    code, _, _ = run(capsys, ["frobnicate"])
    assert code == 2


def test_missing_required_argument_is_usage_error(capsys):
    code, _, err = run(capsys, ["theta"])
    assert code == 2
    assert "--path" in err


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, ["--help"])
    assert code == 0
    assert "invariant perfect tensor toolkit" in out


def test_basis_valence4_lists_labels_with_theta(capsys):
    code, out, _ = run(capsys, ["basis", "--valence", "4"])
    assert code == 0
    assert lines(out) == [
        "config: command=basis split=2 valence=4",
        "2 bridge labels for valence 4, split 2",
        "  1/2,1 | 1,1/2   theta = 3",
        "  1/2,0 | 0,1/2   theta = 4",
    ]


def test_basis_valence6_canonical_order_and_thetas(capsys):
    code, out, _ = run(capsys, ["basis", "--valence", "6"])
    assert code == 0
    assert lines(out)[1:] == [
        "5 bridge labels for valence 6, split 3",
        "  1/2,1,3/2 | 3/2,1,1/2   theta = 4",
        "  1/2,1,1/2 | 1/2,1,1/2   theta = 9/2",
        "  1/2,0,1/2 | 1/2,1,1/2   theta = 6",
        "  1/2,1,1/2 | 1/2,0,1/2   theta = 6",
        "  1/2,0,1/2 | 1/2,0,1/2   theta = 8",
    ]


def test_master_valence4_prints_system_and_family(capsys):
    code, out, _ = run(capsys, ["master", "--valence", "4"])
    assert code == 0
    text = lines(out)
    assert "  |c[1/2,1 | 1,1/2]|^2 = lambda" in text
    assert "  4 |c[1/2,0 | 0,1/2]|^2 = lambda" in text
    assert "  c[1/2,1 | 1,1/2] = sqrt(lam) * exp(i phi1)" in text
    assert "  c[1/2,0 | 0,1/2] = sqrt(lam)/2 * exp(i phi0)" in text
    assert text[-1] == "  domain: lam > 0"


def test_master_valence6_prints_cross_equation_and_domain(capsys):
    code, out, _ = run(capsys, ["master", "--valence", "6"])
    assert code == 0
    assert (
        "  3 c[1/2,0,1/2 | 1/2,1,1/2] conj(c[1/2,1,1/2 | 1/2,1,1/2])"
        " + 4 c[1/2,0,1/2 | 1/2,0,1/2] conj(c[1/2,1,1/2 | 1/2,0,1/2]) = 0"
        in lines(out)
    )
    assert lines(out)[-1] == "  domain: 0 <= A <= 2 sqrt(lam) / 3"
    # four equations after the header line
    eqs = [x for x in lines(out) if "lambda" in x or x.endswith("= 0")]
    assert len(eqs) == 4


def test_repart_closed_form_crossing(capsys):
    code, out, _ = run(capsys, ["repart", "--valence", "4", "--word", "P*"])
    assert code == 0
    text = lines(out)
    assert text[1] == "word P* on valence 4 (binor_crossing):"
    assert text[2].split() == ["1/2,1", "|", "1,1/2", "-1/2", "-1"]
    assert text[3].split() == ["1/2,0", "|", "0,1/2", "-3/4", "1/2"]
    assert text[4] == "involution: True"


def test_repart_swap_convention_is_plain(capsys):
    code, out, _ = run(
        capsys,
        ["repart", "--valence", "4", "--word", "P34", "--convention", "swap"],
    )
    assert code == 0
    text = lines(out)
    assert text[1] == "word P34 on valence 4 (plain_swap):"
    assert text[2].split()[-2:] == ["1", "0"]
    assert text[3].split()[-2:] == ["0", "-1"]
    assert text[-1] == "involution: True"


def test_repart_rejects_swap_crossing_the_split(capsys):
    code, _, err = run(capsys, ["repart", "--valence", "6", "--word", "P25"])
    assert code == 2
    assert "crosses the split" in err


def test_nogo_valence2_is_feasible(capsys):
    code, out, _ = run(capsys, ["nogo", "--valence", "2"])
    assert code == 0
    text = lines(out)
    assert text[1].startswith("step 1 [master]:")
    assert text[3].startswith("step 2 [P*]:")
    assert text[-1].startswith("feasible: the identity is the unique solution up to phase")


def test_nogo_valence4_contradiction(capsys):
    code, out, _ = run(capsys, ["nogo", "--valence", "4"])
    assert code == 1
    assert "step 2 [P*]: dphi = 0 (mod 2pi)" in lines(out)
    assert "step 3 [P34 P* P34]: dphi = pi (mod 2pi)" in lines(out)
    assert any("sqrt(10) lambda" in x for x in lines(out))
    assert lines(out)[-1] == (
        "infeasible: the two repartitions fix the relative phase"
        " to 0 and to pi simultaneously"
    )


def test_nogo_valence6_contradiction(capsys):
    code, out, _ = run(capsys, ["nogo", "--valence", "6"])
    assert code == 1
    text = out
    assert "A = 2 sqrt(lambda)/3, rho = phi" in text
    assert "forcing lambda = 0" in text
    assert "    image_residual_over_lambda = 3" in lines(out)
    assert lines(out)[-1].startswith("infeasible:")


def _write_tensor(path, t):
    with open(path, "w") as fh:
        json.dump(tensors.to_json_dict(t), fh)


def test_certify_perfect_pair_exits_zero(capsys, tmp_path):
    eps = su2.epsilon_matrix(1).astype(complex) / np.sqrt(2)
    f = tmp_path / "eps.json"
    _write_tensor(f, tensors.LabeledTensor((1, 1), eps))
    code, out, _ = run(capsys, ["certify", "--file", str(f)])
    assert code == 0
    text = lines(out)
    assert "  A=(1,)  lambda = 0.5  defect = 0" in text
    assert text[-1] == "verdict: perfect"


def test_certify_imperfect_tensor_exits_one(capsys, tmp_path):
    t = bridge.identity_state(4)
    t = tensors.LabeledTensor(t.legs, t.data / t.norm())
    f = tmp_path / "id4.json"
    _write_tensor(f, t)
    code, out, _ = run(capsys, ["certify", "--file", str(f)])
    assert code == 1
    assert lines(out)[-1] == "verdict: not_perfect"


def test_certify_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, ["certify", "--file", str(tmp_path / "no.json")])
    assert code == 2
    assert "error:" in err


def test_search_vertex_exits_zero(capsys):
    code, out, _ = run(
        capsys, ["search", "--path", "1/2,1/2,1", "--restarts", "20", "--seed", "7"]
    )
    assert code == 0
    assert lines(out)[-1] == "a perfect point was found"


def test_search_qubit_valence4_reports_floor(capsys):
    code, out, _ = run(
        capsys,
        ["search", "--path", "1/2,1/2,1/2,1/2", "--restarts", "8", "--seed", "7"],
    )
    assert code == 1
    text = lines(out)
    assert text[1] == "best summed defect over 8 restarts: 0.866025403784"
    assert text[-1] == "no perfect point found"


def test_layout_overweight_odd_leg_fails(capsys):
    code, out, _ = run(capsys, ["layout", "--path", "1/2,1/2,1/2,1/2,2"])
    assert code == 1
    assert lines(out) == [
        "config: command=layout path=1/2,1/2,1/2,1/2,2",
        "  odd_spin_balance: fail",
        "layout verdict: fail",
    ]


def test_layout_qubit_valence6_passes(capsys):
    code, out, _ = run(capsys, ["layout", "--path", "1/2,1/2,1/2,1/2,1/2,1/2"])
    assert code == 0
    text = lines(out)
    assert "  even_equal_spins: pass" in text
    assert "  scott_bound: pass" in text
    assert text[-1] == "layout verdict: pass"


def test_layout_qubit_valence8_fails_the_dimension_bound(capsys):
    code, out, _ = run(capsys, ["layout", "--path", ",".join(["1/2"] * 8)])
    assert code == 1
    text = lines(out)
    assert "  even_equal_spins: pass" in text
    assert "  scott_bound: fail" in text
    assert text[-1] == "layout verdict: fail"


def test_walk_reports_disjoint_phase_windows(capsys):
    code, out, _ = run(capsys, ["walk"])
    assert code == 1
    text = lines(out)
    assert text[1] == "x = arccos(7/9) = 0.679673818908"
    assert "disjoint: True" in text
    assert text[-1] == "infeasible: the two relative-phase windows cannot both hold"


def test_json_document_shape(capsys):
    code, out, _ = run(capsys, ["theta", "--path", "1/2,0", "--json"])
    assert code == 0
    doc = json.loads(out)
    assert sorted(doc) == ["config", "meta", "result"]
    assert doc["result"] == {"theta": "2"}
    assert doc["config"] == {"command": "theta", "path": "1/2,0", "path2": None}
    assert doc["meta"]["tool"].startswith("su2ipt ")
    assert "timestamp" in doc["meta"]


def test_json_no_meta_is_byte_identical(capsys):
    argv = ["nogo", "--valence", "4", "--json", "--no-meta"]
    _, out1, _ = run(capsys, argv)
    _, out2, _ = run(capsys, argv)
    assert out1 == out2
    doc = json.loads(out1)
    assert sorted(doc) == ["config", "result"]
    assert doc["result"]["feasible"] is False
    assert doc["result"]["exact"] is True


def test_json_verdicts_match_exit_codes(capsys):
    code, out, _ = run(capsys, ["nogo", "--valence", "2", "--json", "--no-meta"])
    assert code == 0
    assert json.loads(out)["result"]["feasible"] is True
    code, out, _ = run(capsys, ["walk", "--json", "--no-meta"])
    assert code == 1
    assert json.loads(out)["result"]["disjoint"] is True
