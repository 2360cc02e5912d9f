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

import sys
import json
import argparse
import logging
import logging.config

from threshpred import __version__, __prog_name__
from threshpred import defaults
from threshpred import helpers
from threshpred import limitsim
from threshpred import montecarlo
from threshpred import runconfig
from threshpred import terminalio
from threshpred import threshpredmain
from threshpred import waldtests


# Error category, exit code
_error_categories = [
    (helpers.ConfigError, 'config', defaults.exit_config),
    (helpers.DataError, 'data', defaults.exit_data),
    (helpers.NumericalError, 'numerical', defaults.exit_numerical),
    (helpers.MissingCriticalValues, 'missing-critical-values', defaults.exit_missing_critical_values),
]


class CLIParser(object):
    """
    threshpred Command Line Interface
    """

    def _configure_logging(self, level='INFO'):
        logging_dict = {
                            'version': 1,
                            'disable_existing_loggers': False,
                            'formatters': {
                                'standard': {
                                    'format': '%(levelname)s %(name)s: %(message)s'
                                },
                            },
                            'handlers': {
                                'default': {
                                    'level': level,
                                    'class': 'logging.StreamHandler',
                                    'formatter': 'standard',
                                    'stream': 'ext://sys.stderr',
                                },
                            },
                            'loggers': {
                                '': {
                                    'handlers': ['default'],
                                    'level': level,
                                    'propagate': True
                                },
                            }
                        }

        logging.config.dictConfig(logging_dict)

    def _create_args(self, parser):
        parser.add_argument('--version', action='version', version='%(prog)s {0}'.format(__version__))

    def _common_args(self):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--config', dest='config', default=None, help='YAML configuration file')
        common.add_argument('--seed', dest='seed', type=int, default=None, help='Global random seed')
        common.add_argument('--out', dest='out', default=None,
                            help='Output file (or directory for critvals and mc)')
        common.add_argument('--workers', dest='workers', type=int, default=None,
                            help='Worker processes for simulations')
        common.add_argument('--verbose', '-v', dest='verbose', action='store_true', default=False,
                            help='Print verbose debug output')
        common.add_argument('--quiet', '-q', dest='quiet', action='store_true', default=False,
                            help='Only print warnings and errors')
        return common

    def _data_args(self, parser):
        parser.add_argument('--data', dest='data', required=True, help='CSV dataset')
        parser.add_argument('--y', dest='y_column', default=None, help='Regressand column (default "y")')
        parser.add_argument('--x', dest='x_columns', nargs='+', default=None,
                            help='Regressor columns (default every x<k> column)')
        parser.add_argument('--q', dest='q_column', default=None, help='Threshold variable column (default "q")')
        parser.add_argument('--date-column', dest='date_column', default=None, help='Date column (default "date" when present)')
        parser.add_argument('--uphi', dest='uphi_columns', nargs='+', default=None,
                            help='Coefficient shock columns (default every uphi<k> column)')
        parser.add_argument('--pi1', dest='pi1', type=float, default=None, help='Lower trimming share')
        parser.add_argument('--pi2', dest='pi2', type=float, default=None, help='Upper trimming share')

    def _ivx_args(self, parser):
        parser.add_argument('--cz', dest='cz', type=float, default=None, help='IVX c_z (default 1)')
        parser.add_argument('--gammaz', dest='gammaz', type=float, default=None, help='IVX gamma_z (default 0.95)')
        parser.add_argument('--ivx-corrected', dest='ivx_corrected', action='store_true', default=None,
                            help='Use the instrument corrected for stochastic unit root coefficients')

    def _persistence_args(self, parser):
        parser.add_argument('--c', dest='c', type=float, nargs='+', default=None, help='Localizing coefficient(s)')
        parser.add_argument('--phi', dest='phi', type=float, nargs='+', default=None, help='Coefficient shock loadings')

    def _table_args(self, parser):
        parser.add_argument('--tables', dest='tables', default=None, help='Directory of critical value tables')
        parser.add_argument('--no-simulate', dest='simulate', action='store_false', default=None,
                            help='Fail rather than simulate missing critical values')
        parser.add_argument('--cv-reps', dest='cv_reps', type=int, default=None,
                            help='Draws per simulated critical value table')
        parser.add_argument('--steps', dest='steps', type=int, default=None,
                            help='Mesh steps for simulated critical values')

    def _create_subparsers(self, parser):
        common = self._common_args()
        subparser = parser.add_subparsers(description='The following subcommands are available', dest='subcmd')

        simulate = subparser.add_parser('simulate', parents=[common], help='Simulate a threshold predictive regression sample',
                                        description='Simulate a sample and write it in the dataset CSV schema')
        simulate.add_argument('--preset', dest='preset', choices=runconfig.PRESETS, default=None)
        simulate.add_argument('--n', dest='n', type=int, default=None, help='Sample size')
        simulate.add_argument('--p', dest='p', type=int, default=None, help='Number of regressors')
        simulate.add_argument('--form', dest='form', choices=['exact', 'expanded'], default=None,
                              help='Autoregressive coefficient form')
        simulate.add_argument('--x0', dest='x0', type=float, default=None, help='Initial regressor value')
        simulate.add_argument('--sigma-uv', dest='sigma_uv', type=float, default=None,
                              help='Covariance between regression and regressor innovations')
        self._persistence_args(simulate)

        est = subparser.add_parser('estimate', parents=[common], help='Estimate the threshold by least squares',
                                   description='Concentrated least squares estimate of the threshold and regime coefficients')
        self._data_args(est)

        test = subparser.add_parser('test', parents=[common], help='Sup-Wald or Wald tests',
                                    description='Sup-Wald tests of linearity or of joint linearity and no predictability')
        self._data_args(test)
        self._ivx_args(test)
        self._persistence_args(test)
        self._table_args(test)
        test.add_argument('--hypothesis', dest='hypothesis', choices=sorted(threshpredmain.HYPOTHESES), default='joint')
        test.add_argument('--estimator', dest='estimator', choices=waldtests.ESTIMATORS, default=waldtests.OLS)
        test.add_argument('--at-estimate', dest='at_estimate', action='store_true', default=False,
                          help='Test beta_1 = beta_2 = 0 at the estimated threshold instead of the sup-Wald')

        iv = subparser.add_parser('ivx', parents=[common], help='IVX regime estimates',
                                  description='IVX estimates at a given threshold, or at the IVX threshold estimate')
        self._data_args(iv)
        self._ivx_args(iv)
        self._persistence_args(iv)
        iv.add_argument('--gamma', dest='gamma', type=float, default=None, help='Threshold value')

        fit = subparser.add_parser('fit-persistence', parents=[common], help='Estimate (c, phi) by NLLS',
                                   description='Nonlinear least squares estimate of the persistence parameters')
        self._data_args(fit)
        fit.add_argument('--c0', dest='c0', type=float, default=0.0, help='Initial c')
        fit.add_argument('--phi0', dest='phi0', type=float, default=0.0, help='Initial phi')
        fit.add_argument('--c-bounds', dest='c_bounds', type=float, nargs=2, default=list(defaults.persistence_c_bounds))
        fit.add_argument('--phi-bounds', dest='phi_bounds', type=float, nargs=2,
                         default=list(defaults.persistence_phi_bounds))
        fit.add_argument('--strict', dest='strict', action='store_true', default=False,
                         help='Fail when the fit does not converge')

        crit = subparser.add_parser('critvals', parents=[common], help='Simulate critical value tables',
                                    description='Tabulate quantiles of the limiting laws of the test statistics')
        crit.add_argument('--functional', dest='functional', choices=limitsim.FUNCTIONALS, required=True)
        crit.add_argument('--p', dest='p', type=int, default=1, help='Number of regressors')
        crit.add_argument('--intercept', dest='intercept', action='store_true', default=False,
                          help='Limit law for a model with regime intercepts')
        crit.add_argument('--reps', dest='reps', type=int, default=None, help='Number of draws')
        crit.add_argument('--steps', dest='steps', type=int, default=None, help='Mesh steps on [0, 1]')
        crit.add_argument('--levels', dest='levels', type=float, nargs='+', default=None)
        crit.add_argument('--pi1', dest='pi1', type=float, default=None, help='Lower trimming share')
        crit.add_argument('--pi2', dest='pi2', type=float, default=None, help='Upper trimming share')
        crit.add_argument('--delta0', dest='delta0', type=float, nargs='+', default=None)
        crit.add_argument('--f-gamma0', dest='f_gamma0', type=float, default=None)
        crit.add_argument('--sigma-u', dest='sigma_u', type=float, default=1.0)
        crit.add_argument('--truncation', dest='truncation', type=float, default=None)
        self._persistence_args(crit)

        mc = subparser.add_parser('mc', parents=[common], help='Run a Monte Carlo experiment',
                                  description='Threshold accuracy, size or power experiments over (n, c, phi) cells')
        mc.add_argument('--kind', dest='kind', choices=montecarlo.KINDS, default=None)
        mc.add_argument('--test', dest='test', choices=montecarlo.TESTS, default=None)
        mc.add_argument('--preset', dest='preset', choices=montecarlo.PRESETS, default=montecarlo.PRESET_BENCHMARK)
        mc.add_argument('--scenario', dest='scenario', choices=sorted(defaults.scenarios), default=None)
        mc.add_argument('--n', dest='n', type=int, nargs='+', default=None)
        mc.add_argument('--reps', dest='reps', type=int, default=None)
        mc.add_argument('--p', dest='p', type=int, default=None)
        mc.add_argument('--estimators', dest='estimators', nargs='+', choices=waldtests.ESTIMATORS, default=None)
        mc.add_argument('--levels', dest='levels', type=float, nargs='+', default=None)
        mc.add_argument('--sigma-uv', dest='sigma_uv', type=float, default=None)
        mc.add_argument('--format', dest='formats', nargs='+', choices=montecarlo.FORMATS, default=list(montecarlo.FORMATS))
        self._persistence_args(mc)
        self._ivx_args(mc)
        self._table_args(mc)

        analyze = subparser.add_parser('analyze', parents=[common], help='Full empirical analysis of a dataset',
                                       description='Threshold estimate, OLS and IVX sup-Wald tests with p-values, '
                                                   'and the predictability test at the estimated threshold')
        self._data_args(analyze)
        self._ivx_args(analyze)
        self._persistence_args(analyze)
        self._table_args(analyze)

    def _overrides(self, args):
        """
        Config overrides from the flags that were given
        """
        def arg(name):
            return getattr(args, name, None)

        overrides = {
            'seed': arg('seed'),
            'workers': arg('workers'),
            'dataset.y': arg('y_column'),
            'dataset.x': arg('x_columns'),
            'dataset.q': arg('q_column'),
            'dataset.date': arg('date_column'),
            'dataset.uphi': arg('uphi_columns'),
            'grid.pi1': arg('pi1'),
            'grid.pi2': arg('pi2'),
            'ivx.cz': arg('cz'),
            'ivx.gammaz': arg('gammaz'),
            'ivx.corrected': arg('ivx_corrected'),
            'critical_values.tables_dir': arg('tables'),
            'critical_values.simulate': arg('simulate'),
            'critical_values.levels': arg('levels') if args.subcmd == 'critvals' else None,
            'experiment.cv_reps': arg('cv_reps'),
            'persistence.form': arg('form'),
            'persistence.x0': arg('x0'),
            'covariance.cross_xy': arg('sigma_uv') if args.subcmd == 'simulate' else None,
            'mesh.reps': arg('reps') if args.subcmd == 'critvals' else None,
            'mesh.steps': arg('steps'),
            'mesh.truncation': arg('truncation'),
        }
        if args.subcmd in ('simulate', 'test', 'ivx', 'analyze'):
            overrides['persistence.c'] = arg('c')
            overrides['persistence.phi'] = arg('phi')
        if args.subcmd == 'simulate':
            overrides['dgp.preset'] = arg('preset')
            overrides['dgp.n'] = arg('n')
            overrides['dgp.p'] = arg('p')
        if args.subcmd == 'mc':
            overrides.update({
                'experiment.kind': arg('kind'),
                'experiment.test': arg('test'),
                'experiment.scenario': arg('scenario'),
                'experiment.n': arg('n'),
                'experiment.c': arg('c'),
                'experiment.phi': arg('phi'),
                'experiment.reps': arg('reps'),
                'experiment.p': arg('p'),
                'experiment.estimators': arg('estimators'),
                'experiment.levels': arg('levels'),
                'experiment.sigma_uv': arg('sigma_uv'),
            })
        return overrides

    def _init_threshpred_object(self, args):
        config = runconfig.RunConfig(args.config, self._overrides(args))
        if args.verbose:
            self._configure_logging('DEBUG')
        elif args.quiet:
            self._configure_logging('WARNING')
        else:
            self._configure_logging(config.get('log_level').upper())
        return threshpredmain.ThreshPred(config)

    def _simulate(self, args):
        app = self._init_threshpred_object(args)
        info = app.simulate(args.out)
        io = terminalio.ReportIO()
        io.heading('Simulated sample')
        io.pairs([('n', info['n']), ('regressors', info['p']), ('gamma0', info['gamma0']),
                  ('regime 1 slopes', helpers.to_jsonable(info['beta1'])),
                  ('regime 2 slopes', helpers.to_jsonable(info['beta2']))])
        io.written(info['path'])
        return 0

    def _estimate(self, args):
        app = self._init_threshpred_object(args)
        result = app.estimate(args.data, args.out)
        io = terminalio.ReportIO()
        io.heading('Threshold estimate')
        io.pairs([('gamma_hat', result['gamma_hat']), ('SSR', result['ssr']), ('sigma2_hat', result['sigma2_hat']),
                  ('regime sizes', result['regime_sizes']), ('regime 1 coefficients', result['theta1']),
                  ('regime 2 coefficients', result['theta2'])])
        io.written(result['path'])
        return 0

    def _print_wald(self, io, result):
        if 'sup' in result:
            io.pairs([('hypothesis', result['hypothesis']['name']), ('estimator', result['estimator']),
                      ('sup-Wald', result['sup']), ('argmax', result['argmax']), ('dof', result['dof']),
                      ('p-value', result['pvalue']), ('p-value source', result['pvalue_source'])])
        else:
            io.pairs([('hypothesis', result['hypothesis']['name']), ('estimator', result['estimator']),
                      ('Wald', result['statistic']), ('gamma_hat', result['gamma']), ('dof', result['dof']),
                      ('p-value', result['pvalue']), ('p-value source', result['pvalue_source'])])

    def _test(self, args):
        app = self._init_threshpred_object(args)
        result = app.test(args.data, args.hypothesis, args.estimator, args.at_estimate, args.c, args.phi,
                          args.tables, args.simulate, args.out)
        io = terminalio.ReportIO()
        io.heading('Wald test')
        self._print_wald(io, result)
        io.written(result['path'])
        return 0

    def _ivx(self, args):
        app = self._init_threshpred_object(args)
        result = app.ivx(args.data, args.gamma, args.out)
        io = terminalio.ReportIO()
        io.heading('IVX estimates')
        io.pairs([('gamma', result['gamma']), ('corrected', result['corrected']),
                  ('coefficients', result['beta_ivx']), ('standard errors', result['standard_errors'])])
        io.written(result['path'])
        return 0

    def _fit_persistence(self, args):
        app = self._init_threshpred_object(args)
        result = app.fit_persistence(args.data, (args.c0, args.phi0), tuple(args.c_bounds), tuple(args.phi_bounds),
                                     args.strict, args.out)
        io = terminalio.ReportIO()
        io.heading('Persistence estimates')
        io.pairs([('c_hat', result['c_hat']), ('phi_hat', result['phi_hat']), ('objective', result['objective']),
                  ('converged', result['converged']), ('iterations', result['iterations'])])
        io.written(result['path'])
        return 0

    def _critvals(self, args):
        app = self._init_threshpred_object(args)
        result = app.critvals(args.functional, args.p, args.intercept, args.c, args.phi, args.levels,
                              args.delta0, args.f_gamma0, args.sigma_u, args.out)
        io = terminalio.ReportIO()
        io.heading('{0} critical values ({1} draws)'.format(result['functional'], result['reps']))
        io.table(zip(result['levels'], result['quantiles'], result['standard_errors']),
                 ['level', 'quantile', 'se'])
        io.written(result['path'])
        return 0

    def _mc(self, args):
        app = self._init_threshpred_object(args)
        result, paths = app.mc(args.formats, args.tables, args.simulate, args.out)
        io = terminalio.ReportIO()
        io.heading('Monte Carlo results')
        print(montecarlo.summarize(result, montecarlo.MARKDOWN))
        for p in paths:
            io.written(p)
        return 0

    def _analyze(self, args):
        app = self._init_threshpred_object(args)
        result = app.analyze(args.data, args.c, args.phi, args.tables, args.simulate, args.out)
        io = terminalio.ReportIO()
        io.heading('Threshold estimate')
        io.pairs([('gamma_hat', result['threshold']['gamma_hat']),
                  ('regime sizes', result['threshold']['regime_sizes'])])
        io.heading('Sup-Wald tests')
        io.table([[t['hypothesis']['name'], t['estimator'], t['sup'], t['dof'], t['pvalue'], t['pvalue_source']]
                  for t in result['sup_wald']], ['hypothesis', 'estimator', 'sup-Wald', 'dof', 'p-value', 'source'])
        io.heading('Predictability at the estimated threshold')
        io.table([[t['estimator'], t['statistic'], t['dof'], t['pvalue']] for t in result['wald_at_threshold']],
                 ['estimator', 'Wald', 'dof', 'p-value'])
        io.written(result['path'])
        return 0

    def _report_error(self, e):
        for cls, category, code in _error_categories:
            if isinstance(e, cls):
                print(terminalio.redden('error: {0}: {1}'.format(type(e).__name__, e)), file=sys.stderr)
                print(json.dumps({'error': {'category': category, 'type': type(e).__name__, 'message': str(e)}},
                                 sort_keys=True), file=sys.stderr)
                return code
        raise e

    def main(self, argv=None):
        parser = argparse.ArgumentParser(__prog_name__,
                                         description='Threshold predictive regression with stochastic unit root regressors')

        self._create_args(parser)
        self._create_subparsers(parser)

        args = parser.parse_args(argv)
        if not args.subcmd:
            parser.print_usage(sys.stderr)
            return defaults.exit_config

        status = defaults.exit_ok
        try:
            if args.subcmd == 'simulate':
                status = self._simulate(args)
            elif args.subcmd == 'estimate':
                status = self._estimate(args)
            elif args.subcmd == 'test':
                status = self._test(args)
            elif args.subcmd == 'ivx':
                status = self._ivx(args)
            elif args.subcmd == 'fit-persistence':
                status = self._fit_persistence(args)
            elif args.subcmd == 'critvals':
                status = self._critvals(args)
            elif args.subcmd == 'mc':
                status = self._mc(args)
            elif args.subcmd == 'analyze':
                status = self._analyze(args)
        except (helpers.ConfigError, helpers.DataError, helpers.NumericalError, helpers.MissingCriticalValues) as e:
            status = self._report_error(e)

        return status

def main(argv=None):
    cli = CLIParser()
    return cli.main(argv)
