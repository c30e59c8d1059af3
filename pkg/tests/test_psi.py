import unittest
from unittest import mock
import os
import math
import numpy as np
from glstoolkit import psi, utils
from glstoolkit.psi import PsiM, PsiML, PsiBGammaL, Degenerate, PsiBBeta, Tabulated, Zeta, SlowlyVarying
from glstoolkit.exceptions import DomainError, PreconditionError, IncompatibleSupportError, \
    InvalidFunctionError


class TestGeneratingFunctions(unittest.TestCase):

    def test_make_family(self):
        """Tests building the named families from descriptors."""
        f = psi.make_family({'family': 'psi_m', 'm': 2.0})
        self.assertIsInstance(f, PsiM)
        self.assertEqual(f.b, np.inf)
        f = psi.make_family({'family': 'degenerate', 'r': 2.0})
        self.assertEqual(f.b, 2.)
        self.assertEqual(f.evaluate(1.5), 1.)
        f = psi.make_family({'family': 'psi_b_beta', 'b': 3.0, 'beta': 1.0})
        self.assertAlmostEqual(f.evaluate(2.), 2., places=12)
        f = psi.make_family({'family': 'psi_b_gamma_l', 'b': 2.0, 'gamma': 0.0,
                             'L': {'kind': 'log_power', 'r': 1.0}})
        self.assertEqual(f.b, 2.)

    def test_invalid_parameters(self):
        """Tests that out-of-range parameters are rejected."""
        with self.assertRaises(PreconditionError):
            PsiM(0.)
        with self.assertRaises(PreconditionError):
            PsiML(1., {'kind': 'constant', 'c': 1.})
        with self.assertRaises(PreconditionError):
            Degenerate(1.)
        with self.assertRaises(PreconditionError):
            PsiBBeta(3., 0.)
        with self.assertRaises(PreconditionError):
            PsiBGammaL(2., -1., {'kind': 'log_power', 'r': 1.})
        with self.assertRaises(PreconditionError):
            psi.make_family({'family': 'unknown'})
        with self.assertRaises(PreconditionError):
            psi.make_family({'family': 'psi_m'})
        for desc in ([1, 2], 'psi_m', {'family': ['psi_m']}, {'family': 'psi_m', 'm': 'two'},
                     {'family': 'psi_m', 'm': 2., 'scale': 'big'}):
            with self.assertRaises(PreconditionError):
                psi.make_family(desc)
        with self.assertRaises(PreconditionError):
            SlowlyVarying('power', 1.)

    def test_evaluate(self):
        """Tests evaluation against direct substitution."""
        self.assertAlmostEqual(psi.evaluate(PsiM(2), 4.), 2., places=12)
        self.assertEqual(psi.evaluate(Degenerate(3), 2.5), 1.)
        self.assertAlmostEqual(psi.evaluate(PsiBBeta(2, 1), 1.5), 2., places=12)
        values = PsiM(2).evaluate(np.array([1., 4., 9.]))
        np.testing.assert_allclose(values, [1., 2., 3.])

    def test_evaluate_domain(self):
        """Tests that arguments outside [1, b) are refused."""
        with self.assertRaises(DomainError):
            PsiM(2).evaluate(0.5)
        with self.assertRaises(DomainError) as cm:
            Degenerate(3).evaluate(3.)
        self.assertIn('b=3', str(cm.exception))
        tab = Tabulated([1., 2., 3.], [1., 2., 4.])
        with self.assertRaises(DomainError):
            tab.evaluate(3.5)
        self.assertAlmostEqual(tab.evaluate(2.5), 3., places=12)

    def test_v_function(self):
        """Tests v(p) = p ln psi(p)."""
        self.assertAlmostEqual(psi.v_function(PsiM(1), math.e), math.e, places=12)
        self.assertEqual(psi.v_function(Degenerate(5), 3.), 0.)
        self.assertAlmostEqual(psi.v_function(PsiM(2), 4.), 4.*math.log(2.), places=12)
        self.assertEqual(psi.v_function(PsiM(3), 1.), 0.)

    def test_normalize(self):
        """Tests normalization to infimum 1 and the recorded scale."""
        f = psi.normalize(PsiM(2, multiplier=2.))
        self.assertAlmostEqual(f.scale, 2., places=12)
        self.assertAlmostEqual(f.evaluate(4.), 2., places=12)
        g = PsiM(2)
        self.assertIs(psi.normalize(g), g)
        self.assertEqual(g.scale, 1.)
        tab = psi.normalize(Tabulated([1., 2., 3.], [1.5, 2., 3.]))
        self.assertAlmostEqual(tab.scale, 1.5, places=12)
        np.testing.assert_allclose(tab.evaluate(np.array([1., 2., 3.])), [1., 4./3., 2.], rtol=1e-12)

    def test_named_families_normalized(self):
        """Tests that every named family is positive, finite and has grid minimum 1."""
        families = [PsiM(0.5), PsiM(2), Degenerate(2),
                    psi.make_family({'family': 'psi_m_l', 'm': 2.}),
                    psi.make_family({'family': 'psi_b_gamma_l', 'b': 2., 'gamma': 0.5}),
                    PsiBBeta(3, 1)]
        for f in families:
            values = f.evaluate(f.grid())
            self.assertTrue(np.all(np.isfinite(values)))
            self.assertTrue(np.all(values > 0))
            self.assertAlmostEqual(values.min(), 1., delta=1e-12)

    def test_descriptor_round_trip(self):
        """Tests that descriptors rebuild the same function, scale included."""
        f = psi.make_family({'family': 'psi_m_l', 'm': 3., 'L': {'kind': 'log_power', 'r': 2.}})
        g = psi.make_family(f.to_descriptor())
        self.assertAlmostEqual(f.evaluate(7.), g.evaluate(7.), places=12)
        z = Zeta(PsiM(2), 0.5).normalized()
        self.assertAlmostEqual(psi.make_family(z.to_descriptor()).evaluate(5.), z.evaluate(5.), places=12)

    def test_zeta(self):
        """Tests the enlarged function p^delta psi(p)."""
        z = Zeta(PsiM(2), 1.)
        self.assertAlmostEqual(z.evaluate(4.), 8., places=12)
        with self.assertRaises(PreconditionError):
            Zeta(PsiM(2), -1.)

    def test_dominates(self):
        """Tests the domination order on the documented examples."""
        self.assertTrue(psi.dominates(PsiM(2), PsiM(1), 1e-2))
        self.assertFalse(psi.dominates(PsiM(2), PsiM(2), 1e-2))
        self.assertTrue(psi.dominates(PsiBBeta(2, 0.5), PsiBBeta(2, 1), 1e-2))
        self.assertFalse(psi.dominates(PsiM(1), PsiM(2), 1e-2))

    def test_dominates_partial_order(self):
        """Tests irreflexivity and transitivity on family instances."""
        chain = [PsiM(4), PsiM(2), PsiM(1), PsiM(0.5)]
        for f in chain:
            self.assertFalse(psi.dominates(f, f))
        for i in range(len(chain)):
            for j in range(i + 1, len(chain)):
                self.assertTrue(psi.dominates(chain[i], chain[j]))
                self.assertFalse(psi.dominates(chain[j], chain[i]))

    def test_dominates_support_mismatch(self):
        """Tests that functions with different support bounds are not compared."""
        with self.assertRaises(IncompatibleSupportError):
            psi.dominates(PsiM(2), Degenerate(2))

    def test_large_m_limit(self):
        """Tests that PsiM(m) approaches the constant 1 as m grows."""
        values = PsiM(1e6).evaluate(np.linspace(1., 100., 50))
        self.assertTrue(np.all(values >= 1.))
        self.assertTrue(np.all(values <= 1.0001))

    def test_tabulated_invalid(self):
        """Tests that non-positive tabulated values are rejected."""
        with self.assertRaises(InvalidFunctionError):
            Tabulated([1., 2.], [1., 0.])
        with self.assertRaises(PreconditionError):
            Tabulated([1., 3.], [1., 2.], b=2.)

    def test_slowly_varying(self):
        """Tests the supported slowly varying functions."""
        L = SlowlyVarying('log_power', 2.)
        self.assertAlmostEqual(float(L(0.)), 1., places=12)
        self.assertAlmostEqual(float(L(1.)), math.log(1. + math.e)**2, places=12)
        self.assertEqual(float(SlowlyVarying('constant', 3.)(10.)), 3.)
        self.assertEqual(SlowlyVarying.from_descriptor(L.to_descriptor()).value, 2.)

    def test_grid_cap(self):
        """Tests that the environment variable overrides the truncation cap."""
        with mock.patch.dict(os.environ, {utils.PMAX_VARIABLE: '64'}):
            grid = PsiM(2).grid()
        self.assertAlmostEqual(grid[-1], 64., places=9)
        self.assertEqual(grid[0], 1.)
        self.assertEqual(len(grid), utils.DEFAULT_NODES)
        grid = Degenerate(2).grid()
        self.assertTrue(np.all(grid < 2.))
        self.assertTrue(np.all(np.diff(grid) > 0))


if __name__ == '__main__':
    unittest.main()
