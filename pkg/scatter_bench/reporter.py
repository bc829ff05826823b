"""
A web reporter built with Flask. It reads the CSV files written to
RESULTS_DIR (stability records, far fields, diagnostics) and shows them as
tables, so sweep results can be browsed without a spreadsheet.
"""

import logging
from pathlib import Path

from flask import Flask, abort, current_app, render_template_string

from scatter_bench import config
from scatter_bench.helpers import ValidationError, read_csv, setup_logging

logger = logging.getLogger(__name__)

app = Flask(__name__)
app.config['RESULTS_DIR'] = config.RESULTS_DIR

HTML_TEMPLATE = """<!doctype html>
<title>scatter_bench results</title>
<link href="https://cdn.jsdelivr.net/npm/bootstrap@5.1.3/dist/css/bootstrap.min.css" rel="stylesheet">
<style>td, th { font-family: monospace; font-size: 0.85em; }</style>
<main class="container-fluid p-4">
  <h2>Results in {{ directory }}</h2>
  <ul class="list-group mb-4">
  {% for file in files %}
    <li class="list-group-item d-flex justify-content-between">
      <a href="/results/{{ file.name }}">{{ file.name }}</a>
      <span>{% if file.failed %}<span class="badge bg-danger">fail</span> {% endif %}{{ file.rows }} rows</span>
    </li>
  {% else %}
    <li class="list-group-item text-muted">No results available yet</li>
  {% endfor %}
  </ul>
  {% if table %}
  <h4>{{ table.name }}</h4>
  <table class="table table-sm table-striped">
    <tr>{% for column in table.header %}<th>{{ column }}</th>{% endfor %}</tr>
    {% for row in table.rows %}
    <tr{% if 'fail' in row %} class="table-danger"{% endif %}>{% for cell in row %}<td>{{ cell }}</td>{% endfor %}</tr>
    {% endfor %}
  </table>
  {% endif %}
</main>
"""


def results_dir() -> Path:
    return Path(current_app.config['RESULTS_DIR'])


def get_file_info(name):
    """Parsed table of a result file, or None if it is not a readable CSV inside the results directory."""
    base = results_dir().resolve()
    file_path = (base / name).resolve()
    if file_path.parent != base or file_path.suffix != ".csv" or not file_path.is_file():
        return None
    try:
        header, rows = read_csv(file_path)
    except ValidationError as e:
        logger.warning(f"Skipping unreadable result {file_path.name}: {e}")
        return None
    return {'name': file_path.name, 'header': header, 'rows': rows,
            'failed': any('fail' in row for row in rows)}


def _summary(info):
    return {'name': info['name'], 'rows': len(info['rows']), 'failed': info['failed']}


@app.route("/")
def index():
    infos = (get_file_info(f.name) for f in sorted(results_dir().glob("*.csv")))
    files = [_summary(info) for info in infos if info]
    return render_template_string(HTML_TEMPLATE, directory=results_dir(), files=files)


@app.route("/results/<name>")
def show_result(name):
    info = get_file_info(name)
    if not info:
        abort(404)
    return render_template_string(HTML_TEMPLATE, directory=results_dir(), files=[_summary(info)], table=info)


@app.errorhandler(404)
def page_not_found(e):
    return render_template_string(
        '<main class="container p-4"><div class="alert alert-danger">Result not found</div></main>'), 404


if __name__ == "__main__":
    setup_logging()
    logger.info(f"Serving {config.RESULTS_DIR} on {config.REPORTER_HOST}:{config.REPORTER_PORT}")
    app.run(host=config.REPORTER_HOST, port=config.REPORTER_PORT)
