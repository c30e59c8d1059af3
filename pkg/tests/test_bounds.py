import unittest
import math
import json
import numpy as np
from glstoolkit import utils
from glstoolkit.bounds import OperatorTypeSpec, BoundReport, TabulatedWeight, tilde_psi, k_constant, \
    k_reference, k_simple_upper, propagate, propagate_tail, target_function, upsilon, upsilon_table
from glstoolkit.numerics import open_grid
from glstoolkit.psi import PsiM, PsiML, PsiBBeta, Degenerate, make_family
from glstoolkit.exceptions import PreconditionError, DomainError, IncompatibleSupportError, \
    NoClosedFormError, NoFiniteValueError


def sample_families():
    return [PsiM(2), Degenerate(2), PsiBBeta(3, 1),
            make_family({'family': 'psi_m_l', 'm': 2.}),
            make_family({'family': 'psi_b_gamma_l', 'b': 2., 'gamma': 0.})]


class TestOperatorType(unittest.TestCase):

    def test_invalid(self):
        """Tests that types outside lambda >= nu >= 0 are rejected."""
        with self.assertRaises(PreconditionError):
            OperatorTypeSpec(1., 2.)
        with self.assertRaises(PreconditionError):
            OperatorTypeSpec(1., -1.)
        with self.assertRaises(PreconditionError):
            OperatorTypeSpec(1., 1., Z=0.)

    def test_factor(self):
        """Tests the type factor and its dictionary form."""
        spec = OperatorTypeSpec(1., 1., 2.)
        self.assertAlmostEqual(float(spec.factor(2.)), 4., places=12)
        self.assertEqual(OperatorTypeSpec.from_dict(spec.to_dict()), spec)
        self.assertEqual(OperatorTypeSpec(2., 0.5).delta, 1.5)

    def test_strict_json(self):
        """Tests that an unbounded support is written as null and read back as inf."""
        spec = OperatorTypeSpec(1., 1.)
        data = json.loads(utils.to_json(spec.to_dict()))
        self.assertIsNone(data['b'])
        self.assertEqual(OperatorTypeSpec.from_dict(data).b, np.inf)
        self.assertEqual(json.loads(utils.to_json({'x': [np.nan, -np.inf, 1.]})), {'x': [None, None, 1.]})


class TestTildePsi(unittest.TestCase):

    def test_branches(self):
        """Tests both branches of the two-branch function."""
        psi = PsiM(2)
        self.assertAlmostEqual(tilde_psi(psi, 2., 1., 1.5), 2.*math.sqrt(2.), places=12)
        self.assertAlmostEqual(tilde_psi(psi, 2., 1., 4.), 8./3., places=12)
        self.assertAlmostEqual(tilde_psi(psi, 2., 0., 4.), 2., places=12)
        values = tilde_psi(psi, 2., 1., np.array([1., 2., 4.]))
        np.testing.assert_allclose(values, [2.*math.sqrt(2.), 2.*math.sqrt(2.), 8./3.])

    def test_ratio_bound(self):
        """Tests that psi~/psi is at most (q/(q-1))^lambda psi(q) on the p-grid."""
        for psi in (PsiM(2), Degenerate(2), PsiBBeta(3, 1)):
            grid = psi.grid()
            for q in open_grid(psi.b, 16, utils.get_pmax()):
                for lam in (0.5, 1., 2.):
                    ratio = tilde_psi(psi, q, lam, grid)/psi.evaluate(grid)
                    bound = (q/(q - 1.))**lam*psi.evaluate(q)
                    self.assertLessEqual(ratio.max(), bound*(1. + 1e-12))

    def test_switch_point(self):
        """Tests that switch points outside (1, b) are refused."""
        with self.assertRaises(DomainError):
            tilde_psi(PsiM(2), 1., 1., 2.)
        with self.assertRaises(DomainError):
            tilde_psi(Degenerate(2), 2., 1., 1.5)
        with self.assertRaises(PreconditionError):
            tilde_psi(PsiM(2), 2., -1., 2.)


class TestKConstant(unittest.TestCase):

    def test_known_values(self):
        """Tests K_1 and K_2 of the first power families."""
        self.assertAlmostEqual(k_constant(PsiM(1), 1.).value, 4., places=8)
        report = k_constant(PsiM(2), 1.)
        self.assertAlmostEqual(report.value, 3.*math.sqrt(3.)/2., places=8)
        self.assertAlmostEqual(report.argmin_q, 3., places=4)
        self.assertEqual(report.flags, [])
        self.assertEqual(report.target_space, {'family': 'psi_m', 'm': 2.})

    def test_power_family_reference(self):
        """Tests the grid minimum against the closed form on the power families."""
        for m in (0.5, 1., 2., 4.):
            for lam in (0.5, 1., 2.):
                numeric = k_constant(PsiM(m), lam)
                reference = k_reference(PsiM(m), lam)
                self.assertLessEqual(abs(numeric.value - reference.value), 1e-8*reference.value)
                self.assertAlmostEqual(numeric.argmin_q, lam*m + 1., delta=1e-3*(lam*m + 1.))

    def test_degenerate(self):
        """Tests that the degenerate infimum is approached at the support bound."""
        for r in (1.5, 2., 3.):
            for lam in (0.5, 1., 2.):
                report = k_constant(Degenerate(r), lam)
                expected = (r/(r - 1.))**lam
                self.assertLessEqual(abs(report.value - expected), 1e-8*expected)
                self.assertIn('boundary_attained', report.flags)

    def test_bounded_support_family(self):
        """Tests that the grid minimum never exceeds the stationary-point value."""
        for b, beta in ((2., 0.5), (2., 1.), (3., 0.5), (3., 1.)):
            for lam in (0.5, 1., 2.):
                numeric = k_constant(PsiBBeta(b, beta), lam)
                self.assertLessEqual(numeric.value, k_reference(PsiBBeta(b, beta), lam).value + 1e-9)

    def test_lambda_zero(self):
        """Tests that K_0 is the infimum of psi."""
        self.assertAlmostEqual(k_constant(PsiM(2), 0.).value, 1., places=9)
        self.assertIn('boundary_attained', k_constant(PsiM(2), 0.).flags)

    def test_sandwich(self):
        """Tests 1 <= K_lambda <= the simple upper estimate."""
        for psi in sample_families():
            for lam in (0., 0.5, 1., 2.):
                value = k_constant(psi, lam).value
                self.assertGreaterEqual(value, 1. - 1e-9)
                self.assertLessEqual(value, k_simple_upper(psi, lam)*(1. + 1e-9))

    def test_monotone_in_lambda(self):
        """Tests that K_lambda grows with lambda."""
        values = [k_constant(PsiM(2), lam).value for lam in (0., 0.5, 1., 2., 4.)]
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))

    def test_support_mismatch(self):
        """Tests that an explicit support bound must agree with psi."""
        with self.assertRaises(IncompatibleSupportError):
            k_constant(PsiM(2), 1., b=3.)
        self.assertAlmostEqual(k_constant(Degenerate(3), 1., b=3.).value, 1.5, places=8)


class TestKReference(unittest.TestCase):

    def test_values(self):
        """Tests the closed forms of the named families."""
        self.assertAlmostEqual(k_reference(PsiM(2), 1.).value, 3.*math.sqrt(3.)/2., places=12)
        self.assertAlmostEqual(k_reference({'family': 'degenerate', 'r': 3.}, 2.).value, 2.25, places=12)
        report = k_reference(PsiBBeta(2, 1), 1.)
        self.assertAlmostEqual(report.value, 6., places=12)
        self.assertAlmostEqual(report.argmin_q, 1.5, places=12)
        self.assertIn('upper_bound', report.flags)
        self.assertEqual(k_reference(PsiM(3), 0.).value, 1.)

    def test_no_closed_form(self):
        """Tests that families without a closed form are refused."""
        with self.assertRaises(NoClosedFormError):
            k_reference(PsiML(2, {'kind': 'log_power', 'r': 1.}), 1.)

    def test_large_m(self):
        """Tests that the power-family constant decreases towards 1."""
        values = [k_reference(PsiM(m), 1.).value for m in (1., 10., 100., 1000.)]
        self.assertTrue(all(b < a for a, b in zip(values, values[1:])))
        self.assertLess(values[-1], 1.01)
        self.assertGreater(values[-1], 1.)


class TestSimpleUpper(unittest.TestCase):

    def test_values(self):
        """Tests the objective at q = 2 and at the middle of short supports."""
        self.assertAlmostEqual(k_simple_upper(PsiM(2), 1.), 2.*math.sqrt(2.), places=12)
        self.assertAlmostEqual(k_simple_upper(Degenerate(1.5), 1.), 5., places=12)


class TestPropagate(unittest.TestCase):

    def test_equal_powers(self):
        """Tests the bound Z K_lambda ||f|| in the input space."""
        report = propagate(OperatorTypeSpec(1., 1.), PsiM(2), 1.)
        self.assertAlmostEqual(report.value, 3.*math.sqrt(3.)/2., places=8)
        self.assertEqual(target_function(report).family, 'psi_m')
        self.assertEqual(propagate(OperatorTypeSpec(1., 1.), PsiM(2), 0.).value, 0.)

    def test_unequal_powers(self):
        """Tests the bound in the enlarged space for lambda > nu."""
        report = propagate(OperatorTypeSpec(1., 0.), PsiM(2), 1.)
        self.assertAlmostEqual(report.value, 1., places=9)
        self.assertEqual(report.target_space['family'], 'zeta')
        zeta = target_function(report)
        self.assertAlmostEqual(zeta.evaluate(4.), 8., places=9)

    def test_same_space_alternative(self):
        """Tests the alternative bound attached for finite support."""
        report = propagate(OperatorTypeSpec(1., 0., b=2.), Degenerate(2), 1.)
        self.assertEqual(len(report.alternatives), 1)
        alternative = report.alternatives[0]
        self.assertAlmostEqual(alternative.value, 2., places=9)
        self.assertIn('same_space', alternative.flags)
        self.assertEqual(alternative.target_space['family'], 'degenerate')
        self.assertEqual(propagate(OperatorTypeSpec(1., 0.), PsiM(2), 1.).alternatives, [])

    def test_homogeneous(self):
        """Tests that the bound is linear in the input norm and in Z."""
        base = propagate(OperatorTypeSpec(2., 1.), PsiM(1), 1.).value
        self.assertAlmostEqual(propagate(OperatorTypeSpec(2., 1.), PsiM(1), 2.5).value, 2.5*base, places=9)
        self.assertAlmostEqual(propagate(OperatorTypeSpec(2., 1., Z=3.), PsiM(1), 1.).value, 3.*base, places=9)

    def test_support_mismatch(self):
        """Tests that the operator and psi must share the support bound."""
        with self.assertRaises(IncompatibleSupportError):
            propagate(OperatorTypeSpec(1., 1., b=3.), PsiM(2), 1.)
        with self.assertRaises(PreconditionError):
            propagate(OperatorTypeSpec(1., 1.), PsiM(2), -1.)

    def test_report_json(self):
        """Tests that reports survive a JSON round trip."""
        report = propagate(OperatorTypeSpec(1., 0., b=2.), Degenerate(2), 1.)
        self.assertEqual(BoundReport.from_json(report.to_json()), report)

    def test_propagate_tail(self):
        """Tests the tail envelope implied by the propagated bound."""
        spec = OperatorTypeSpec(1., 1.)
        report = propagate(spec, PsiM(2), 1.)
        tail = propagate_tail(spec, PsiM(2), 1.)
        self.assertAlmostEqual(tail.y_min, math.e*report.value, places=9)
        self.assertEqual(tail(1.), 1.)
        self.assertLess(tail(10.*report.value), 1.)


class TestUpsilon(unittest.TestCase):

    def test_hardy_weight(self):
        """Tests the Hardy weight on the degenerate function."""
        self.assertAlmostEqual(upsilon(lambda q: q/(q - 1.), Degenerate(2), 1.2), 2., places=6)

    def test_constant_weight(self):
        """Tests that a constant weight reduces to c psi."""
        table = upsilon_table(lambda q: np.full_like(q, 3.), PsiM(2), [4.])
        self.assertAlmostEqual(table['value'][0], 6., places=12)
        self.assertEqual(table['branch'][0], 'direct')

    def test_matches_two_branch_minimum(self):
        """Tests that upsilon equals the minimum of the two-branch functions over the q-grid."""
        psi = PsiM(2)
        q_grid = open_grid(psi.b, utils.DEFAULT_NODES, utils.get_pmax())
        expected = min(tilde_psi(psi, q, 1., 3.) for q in q_grid)
        self.assertAlmostEqual(upsilon(lambda q: q/(q - 1.), psi, 3.), expected, places=12)

    def test_below_both_branches(self):
        """Tests upsilon <= W psi and upsilon <= min over q >= p of W psi."""
        psi = PsiM(2)
        weight = lambda q: (q/(q - 1.))**2
        grid = np.array([1.5, 2., 3., 5., 10.])
        table = upsilon_table(weight, psi, grid)
        q_grid = open_grid(psi.b, utils.DEFAULT_NODES, utils.get_pmax())
        for p, value in zip(grid, table['value']):
            self.assertLessEqual(value, weight(p)*psi.evaluate(p) + 1e-12)
            right = q_grid[q_grid >= p]
            self.assertLessEqual(value, np.min(weight(right)*psi.evaluate(right)) + 1e-12)

    def test_tabulated_weight(self):
        """Tests a right-continuous tabulated weight on both branches."""
        W = TabulatedWeight([1.5, 2., 3.], [5., 1., 4.])
        self.assertEqual(W(1.), np.inf)
        self.assertEqual(W(2.5), 1.)
        table = upsilon_table(W, PsiM(2), [1.5, 2.5])
        self.assertAlmostEqual(table['value'][0], math.sqrt(2.), places=12)
        self.assertEqual(table['branch'][0], 'lyapunov')
        self.assertEqual(table['argmin_q'][0], 2.)
        self.assertAlmostEqual(table['value'][1], math.sqrt(2.5), places=12)
        self.assertEqual(table['branch'][1], 'direct')

    def test_infinite_weight(self):
        """Tests that a weight infinite everywhere raises an error."""
        with self.assertRaises(NoFiniteValueError):
            upsilon(lambda q: np.full_like(q, np.inf), PsiM(2), 2.)
        with self.assertRaises(PreconditionError):
            TabulatedWeight([1., 2.], [1., -1.])


if __name__ == '__main__':
    unittest.main()
