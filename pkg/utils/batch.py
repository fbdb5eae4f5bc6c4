import sys
import functools

import joblib
import tqdm

import config

# Simplify `tqdm` calling. Reports go to stdout, progress to stderr.
tqdm = functools.partial(tqdm.tqdm, file=sys.stderr, position=0, leave=True)


def run(function, items, jobs=1, description='Computing'):
    """ Apply a function to every item, optionally on several threads.

    Sympy function classes created at runtime do not pickle, so work is
    fanned out over threads rather than processes. Results keep the order
    of `items`.

    Args:
        function (func): Function taking one item.
        items (list): Items to process.
        jobs (int, optional): Number of worker threads; 1 runs inline.
        description (str, optional): Progress bar label.

    Returns:
        list

    """
    items = list(items)
    progress_bar = tqdm(items, disable=config.progress['disable'])
    progress_bar.set_description(description)
    if jobs == 1:
        return [function(item) for item in progress_bar]
    return joblib.Parallel(n_jobs=jobs, prefer='threads')(
        joblib.delayed(function)(item) for item in progress_bar
    )
