import pytest

from silif.cli import main

FAST = [
    "--seeds", "42,43",
    "--trees", "20",
    "--subsample", "64",
    "--k", "3",
    "--alphas", "0,1",
]


class TestCli:
    def test_synthetic_run_succeeds(self, tmp_path, capsys):
        code = main(
            ["--synthetic", "200,10,3", "--methods", "iforest,hbos", "--out", str(tmp_path)]
            + FAST
        )
        assert code == 0
        assert (tmp_path / "per_seed_results.csv").exists()
        assert (tmp_path / "aggregate.csv").exists()
        out = capsys.readouterr().out
        assert "iforest" in out
        assert "z-scored" in out

    def test_save_models(self, tmp_path):
        code = main(
            ["--synthetic", "120,6,3", "--methods", "silif", "--save-models",
             "--out", str(tmp_path)] + FAST
        )
        assert code == 0
        assert (tmp_path / "models" / "forest_seed42.json").exists()
        assert (tmp_path / "models" / "clusters_seed42.json").exists()

    def test_requires_a_data_source(self):
        with pytest.raises(SystemExit) as exc:
            main(["--out", "unused"])
        assert exc.value.code == 2

    def test_missing_csv_is_a_diagnostic_error(self, tmp_path, capsys):
        cfg = tmp_path / "cols.cfg"
        cfg.write_text(
            "amount_column = amount\ntype_column = type\n"
            "numeric_columns = n1,n2,n3,n4\ncustomer_column = customer\n"
            "label_column = label\n",
            encoding="utf-8",
        )
        code = main(
            ["--data", str(tmp_path / "missing.csv"), "--config", str(cfg),
             "--out", str(tmp_path / "out")] + FAST
        )
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_data_without_config_rejected(self, tmp_path, capsys):
        code = main(["--data", str(tmp_path / "x.csv"), "--out", str(tmp_path)] + FAST)
        assert code == 1
        assert "--config" in capsys.readouterr().err

    def test_csv_pipeline_end_to_end(self, tmp_path):
        cfg = tmp_path / "cols.cfg"
        cfg.write_text(
            "amount_column = amount\ntype_column = type\n"
            "numeric_columns = n1,n2,n3,n4\ncustomer_column = customer\n"
            "label_column = label\nmin_transactions = 2\n",
            encoding="utf-8",
        )
        rows = ["amount,type,n1,n2,n3,n4,customer,label"]
        for i in range(40):
            label = 1 if i % 13 == 0 else 0
            amount = 1000.0 if label else float(i % 7)
            rows.append(f"{amount},T{i % 3},{i % 5},{i % 4},{i % 3},{i % 2},{i % 6},{label}")
        csv_path = tmp_path / "tx.csv"
        csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        code = main(
            ["--data", str(csv_path), "--config", str(cfg), "--methods", "iforest,hbos",
             "--out", str(tmp_path / "out"), "--seeds", "42", "--trees", "10",
             "--subsample", "16", "--alphas", "0"]
        )
        assert code == 0
        assert (tmp_path / "out" / "per_seed_results.csv").exists()

    def test_bad_method_list(self, tmp_path, capsys):
        code = main(
            ["--synthetic", "50,5,2", "--methods", "wizardry", "--out", str(tmp_path)]
            + FAST
        )
        assert code == 1
        assert "unknown method" in capsys.readouterr().err
