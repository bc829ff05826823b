# scatter_bench/__init__.py
# Maxwell PEC scattering workbench: solver, sphere oracle, diagnostics and stability harness.
