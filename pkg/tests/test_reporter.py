"""
tests/test_reporter.py

Tests for the Flask results browser.
"""

import tempfile
import unittest
from pathlib import Path

from scatter_bench.helpers import write_csv
from scatter_bench.reporter import app


class TestReporter(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        app.config['TESTING'] = True
        app.config['RESULTS_DIR'] = str(self.dir)
        self.client = app.test_client()

    def tearDown(self):
        self.tmp.cleanup()

    def test_empty_directory(self):
        response = self.client.get("/")
        self.assertEqual(response.status_code, 200)
        self.assertIn(b"No results available yet", response.data)

    def test_lists_csv_files_only(self):
        write_csv(self.dir / "radiation_check.csv", ("check_name", "status"), [("helmholtz", "pass")])
        (self.dir / "notes.txt").write_text("not a result")
        response = self.client.get("/")
        self.assertIn(b"radiation_check.csv", response.data)
        self.assertNotIn(b"notes.txt", response.data)

    def test_shows_table_and_failures(self):
        write_csv(self.dir / "mie_validate.csv", ("check_name", "status"), [("mie_far_field", "fail")],
                  schema_version=1)
        response = self.client.get("/results/mie_validate.csv")
        self.assertEqual(response.status_code, 200)
        self.assertIn(b"mie_far_field", response.data)
        self.assertIn(b"table-danger", response.data)

    def test_missing_file(self):
        response = self.client.get("/results/missing.csv")
        self.assertEqual(response.status_code, 404)
        self.assertIn(b"Result not found", response.data)

    def test_rejects_other_files(self):
        (self.dir / "notes.txt").write_text("x")
        self.assertEqual(self.client.get("/results/notes.txt").status_code, 404)
        self.assertEqual(self.client.get("/results/..%2Fsecret.csv").status_code, 404)


if __name__ == "__main__":
    unittest.main()
