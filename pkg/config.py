import os

numeric = {
    'samples': 200,
    'seed': 0,
    'tol': 1e-6,
    'sample_points': 32,
    'fd_step': 1e-3,
    'sample_range': (-2.0, 2.0),
    'max_rejections': 1000,
    'pole_margin': 1e-2,
}

ansatz = {
    'max_degree': 3,
}

adjoint = {
    'max_order': 12,
}

progress = {
    'disable': False,
}

printed_data_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'paper-data')

output_dir = os.environ.get('BURGERS_OUTPUT_DIR', 'reports')
