# Copyright 2016 Data61
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from setuptools import setup
from threshpred import __version__


extra = {'scripts': ['bin/threshpred']}

setup(name='threshpred',
      version=__version__,
      packages=['threshpred'],
      description = 'Threshold predictive regressions with stochastic unit root regressors: '
                    'estimation, sup-Wald tests, critical value simulation and Monte Carlo experiments',
      author = 'Data61',
      keywords = ['threshold', 'predictive regression', 'IVX', 'stochastic unit root', 'econometrics'],
      classifiers = [],
      python_requires='>=3.6',
      install_requires=['numpy', 'scipy', 'pandas', 'pyyaml', 'python-dateutil', 'tabulate'],
      extras_require={'test': ['pytest', 'mock']},
      **extra
      )
