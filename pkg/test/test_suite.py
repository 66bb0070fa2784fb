import os
import sys
import unittest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def create_suite():
    loader = unittest.TestLoader()
    return loader.discover(os.path.dirname(os.path.abspath(__file__)), pattern='*_test.py')


if __name__ == '__main__':
    suite = create_suite()

    runner = unittest.TextTestRunner()
    result = runner.run(suite)
    sys.exit(0 if result.wasSuccessful() else 1)
