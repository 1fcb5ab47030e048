import json
from pathlib import Path

import numpy as np
import pytest

from psychfit.cli import (
    EXIT_CRITERIA_FAILED,
    EXIT_ERROR,
    EXIT_OK,
    PipelineConfig,
    export_forms,
    main,
    run_pipeline,
    select_model,
)
from psychfit.fitstats import LrtResult
from psychfit.ingest import BankItem, ItemBank
from psychfit.irt import IrtFit, ItemParams, QuadratureGrid
from psychfit.simulate import SimSpec, sample_item_params, simulate_responses


@pytest.fixture(scope="module")
def responses_csv(tmp_path_factory):
    items = sample_item_params(10, seed=91, a_range=(0.8, 1.5), b_range=(-1.5, 1.5))
    m, _ = simulate_responses(SimSpec(items=items, n=600, seed=91))
    path = tmp_path_factory.mktemp("data") / "responses.csv"
    path.write_text(m.to_csv(), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def bank_json(tmp_path_factory):
    bank = ItemBank(tuple(
        BankItem(f"q{i+1}", "Ethics", f"stem {i+1}", ("A", "B", "C", "D"), "ABCD"[i % 4])
        for i in range(6)
    ))
    path = tmp_path_factory.mktemp("bank") / "bank.json"
    path.write_text(bank.to_json(), encoding="utf-8")
    return path


def _stub(kind, k):
    return IrtFit(kind, ("q1",), (ItemParams(1.0, 0.0),), 1.0, 0.0, k, 100, 1,
                  True, 0, (), QuadratureGrid.standard_normal())


class TestSelectModel:
    def test_stops_at_first_nonsignificant(self):
        fits = [_stub("rasch", 2), _stub("2pl", 2), _stub("3pl", 3)]
        lrts = [LrtResult(10.0, 1, 0.001, False), LrtResult(0.5, 1, 0.5, False)]
        assert select_model(fits, lrts) == "2pl"

    def test_keeps_simplest(self):
        fits = [_stub("rasch", 2), _stub("2pl", 2)]
        assert select_model(fits, [LrtResult(0.1, 1, 0.8, False)]) == "rasch"

    def test_advances_to_most_complex(self):
        fits = [_stub("rasch", 2), _stub("2pl", 2), _stub("3pl", 3)]
        lrts = [LrtResult(50.0, 1, 1e-9, False), LrtResult(30.0, 1, 1e-5, False)]
        assert select_model(fits, lrts) == "3pl"


class TestSubcommands:
    def test_ctt(self, responses_csv, tmp_path):
        code = main(["ctt", str(responses_csv), "--out", str(tmp_path)])
        assert code == EXIT_OK
        lines = (tmp_path / "itemstats.csv").read_text().strip().splitlines()
        assert lines[0] == "item_id,difficulty,pbis,upper_lower,retained"
        assert len(lines) == 11
        sel = json.loads((tmp_path / "selection.json").read_text())
        assert set(sel) == {"retained", "excluded", "threshold", "variant"}

    def test_fit(self, responses_csv, tmp_path):
        code = main(["fit", str(responses_csv), "--model", "2pl", "--out", str(tmp_path)])
        assert code == EXIT_OK
        fit = json.loads((tmp_path / "fit.json").read_text())
        assert fit["model"] == "2pl"
        assert fit["k"] == 20
        assert len(fit["items"]) == 10

    def test_compare(self, responses_csv, tmp_path):
        code = main(["compare", str(responses_csv), "--models", "rasch,2pl",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        cmp_json = json.loads((tmp_path / "compare.json").read_text())
        assert cmp_json["selected_model"] in ("rasch", "2pl")
        assert cmp_json["lrt"][0]["df"] == 9  # 2J - (J+1) for J = 10

    def test_itemfit(self, responses_csv, tmp_path):
        code = main(["itemfit", str(responses_csv), "--models", "2pl",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        lines = (tmp_path / "itemfit.csv").read_text().strip().splitlines()
        assert lines[0] == "model,item_id,s_chi2,df,p,p_adjusted"
        assert len(lines) == 11

    def test_regress(self, tmp_path):
        rng = np.random.default_rng(92)
        x1, x2 = rng.normal(size=80), rng.normal(size=80)
        y = 0.4 * x1 - 0.2 * x2 + rng.normal(size=80)
        csv_path = tmp_path / "scores.csv"
        csv_path.write_text(
            "y,x1,x2\n" + "\n".join(f"{a},{b},{c}" for a, b, c in zip(y, x1, x2)))
        code = main(["regress", str(csv_path), "--dv", "y", "--ivs", "x1,x2",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        reg = json.loads((tmp_path / "regression.json").read_text())
        assert [c["name"] for c in reg["coefficients"]] == ["intercept", "x1", "x2"]
        assert (tmp_path / "pred_vs_obs.svg").read_text().startswith("<svg")

    def test_simulate_round_trip(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({
            "n": 25,
            "items": [{"a": 1.0, "b": 0.0}, {"a": 1.5, "b": -0.5}, {"a": 0.9, "b": 0.7}],
        }))
        code = main(["simulate", "--spec", str(spec_path), "--seed", "5",
                     "--out", str(tmp_path / "sim")])
        assert code == EXIT_OK
        truth = json.loads((tmp_path / "sim" / "truth.json").read_text())
        assert truth["seed"] == 5
        assert len(truth["thetas"]) == 25
        # the written CSV reproduces the library call exactly
        items = (ItemParams(1.0, 0.0), ItemParams(1.5, -0.5), ItemParams(0.9, 0.7))
        m, _ = simulate_responses(SimSpec(items=items, n=25, seed=5))
        assert (tmp_path / "sim" / "responses.csv").read_text() == m.to_csv()

    def test_missing_file_error_exit(self, tmp_path):
        code = main(["ctt", str(tmp_path / "nope.csv"), "--out", str(tmp_path)])
        assert code >= 20

    def test_malformed_input_error_exit(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,q1,q2\np1,1,7\n")
        code = main(["ctt", str(bad), "--out", str(tmp_path)])
        assert code == EXIT_ERROR


class TestForms:
    def test_export_shapes(self, bank_json, tmp_path):
        bank = ItemBank.from_json(bank_json)
        written = export_forms(bank, 3, seed=4, out_dir=tmp_path)
        assert len(written) == 6
        form = json.loads((tmp_path / "form_1.json").read_text())
        keys = json.loads((tmp_path / "form_1_key.json").read_text())
        assert len(form["items"]) == 6
        assert [it["position"] for it in form["items"]] == [1, 2, 3, 4, 5, 6]
        assert set(it["id"] for it in form["items"]) == {f"q{i+1}" for i in range(6)}
        for it in form["items"]:
            k = keys["keys"][it["id"]]
            assert it["options"][k["key_index"]] == k["key"]

    def test_forms_differ_but_deterministic(self, bank_json, tmp_path):
        bank = ItemBank.from_json(bank_json)
        export_forms(bank, 2, seed=4, out_dir=tmp_path / "a")
        export_forms(bank, 2, seed=4, out_dir=tmp_path / "b")
        for name in ("form_1.json", "form_2.json", "form_1_key.json", "form_2_key.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        f1 = json.loads((tmp_path / "a" / "form_1.json").read_text())
        f2 = json.loads((tmp_path / "a" / "form_2.json").read_text())
        assert [i["id"] for i in f1["items"]] != [i["id"] for i in f2["items"]] or \
            [i["options"] for i in f1["items"]] != [i["options"] for i in f2["items"]]

    def test_cli_forms(self, bank_json, tmp_path):
        code = main(["forms", str(bank_json), "--n-forms", "2", "--seed", "1",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        assert (tmp_path / "form_2_key.json").exists()


class TestPipeline:
    def test_report_outputs_and_determinism(self, responses_csv, tmp_path):
        args = ["report", str(responses_csv), "--models", "rasch,2pl"]
        code1 = main(args + ["--out", str(tmp_path / "r1")])
        code2 = main(args + ["--out", str(tmp_path / "r2")])
        assert code1 in (EXIT_OK, EXIT_CRITERIA_FAILED)
        assert code1 == code2
        files1 = sorted(p.name for p in (tmp_path / "r1").iterdir())
        assert files1 == sorted(p.name for p in (tmp_path / "r2").iterdir())
        for name in files1:
            assert (tmp_path / "r1" / name).read_bytes() == \
                (tmp_path / "r2" / name).read_bytes()
        expected = {"itemstats.csv", "selection.json", "assumptions.json",
                    "fit_rasch.json", "fit_2pl.json", "icc_rasch.svg", "icc_2pl.svg",
                    "compare.json", "itemfit.csv", "reliability.json", "tif.svg",
                    "report.json"}
        assert expected <= set(files1)

    def test_run_pipeline_report_contract(self, responses_csv, tmp_path):
        report = run_pipeline(PipelineConfig(
            responses=str(responses_csv), out_dir=str(tmp_path), models=("2pl",)))
        assert report["selected_model"] == "2pl"
        assert report["n_items"] == 10
        assert isinstance(report["all_criteria_pass"], bool)
        assert report["all_criteria_pass"] == all(report["criteria_pass"].values())
        on_disk = json.loads((Path(tmp_path) / "report.json").read_text())
        assert on_disk["selected_model"] == "2pl"

    def test_item_filter_drops_items(self, tmp_path):
        # add a pure-noise item that the CTT filter should remove
        items = sample_item_params(8, seed=93, a_range=(1.0, 1.8), b_range=(-1.0, 1.0))
        m, _ = simulate_responses(SimSpec(items=items, n=500, seed=93))
        rng = np.random.default_rng(93)
        cells = np.column_stack([m.cells, (rng.random(500) < 0.5).astype(int)])
        csv_path = tmp_path / "responses.csv"
        header = "id," + ",".join(f"q{i+1}" for i in range(9))
        rows = "\n".join(f"p{i+1}," + ",".join(map(str, row)) for i, row in enumerate(cells))
        csv_path.write_text(header + "\n" + rows + "\n")
        report = run_pipeline(PipelineConfig(
            responses=str(csv_path), out_dir=str(tmp_path / "out"),
            models=("2pl",), apply_item_filter=True))
        assert "q9" in report["ctt"]["selection"]["excluded"]
        assert report["n_items"] < 9
