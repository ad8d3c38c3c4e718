// Python bindings for the fee-market toolkit.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "feemarket/eo_model.hpp"
#include "feemarket/event_sim.hpp"
#include "feemarket/numerics.hpp"
#include "feemarket/patient_model.hpp"
#include "feemarket/types.hpp"
#include "feemarket/uc_model.hpp"

namespace py = pybind11;
using namespace feemarket;
namespace pat = feemarket::patient;

namespace {

std::string threshold_repr(const ThresholdTime& t) {
    std::ostringstream os;
    switch (t.kind) {
        case ThresholdTime::Kind::never_suspend: os << "ThresholdTime.never_suspend()"; break;
        case ThresholdTime::Kind::never_operate: os << "ThresholdTime.never_operate()"; break;
        case ThresholdTime::Kind::finite: os << "ThresholdTime.finite(" << t.value << ")";
    }
    return os.str();
}

}  // namespace

PYBIND11_MODULE(_feemarket, m) {
    m.doc() = "Pay-as-bid fee market: equilibrium bids, miner thresholds, welfare, "
              "Monte Carlo simulation";

    py::register_exception<Error>(m, "FeemarketError");

    py::class_<Tolerance>(m, "Tolerance")
        .def(py::init<>())
        .def(py::init([](double abs_tol, double rel_tol, int max_iter) {
                 return Tolerance{abs_tol, rel_tol, max_iter};
             }),
             py::arg("abs_tol") = 1e-10, py::arg("rel_tol") = 1e-10,
             py::arg("max_iter") = 200)
        .def_readwrite("abs_tol", &Tolerance::abs_tol)
        .def_readwrite("rel_tol", &Tolerance::rel_tol)
        .def_readwrite("max_iter", &Tolerance::max_iter);

    py::class_<RandomSource>(m, "RandomSource")
        .def(py::init([](std::uint64_t seed, std::uint64_t stream_id) {
                 return RandomSource{seed, stream_id};
             }),
             py::arg("seed") = 0, py::arg("stream_id") = 0)
        .def_readwrite("seed", &RandomSource::seed)
        .def_readwrite("stream_id", &RandomSource::stream_id);

    py::class_<MarketParams>(m, "MarketParams")
        .def(py::init([](double arrival_rate, double capacity, double operating_cost,
                         double block_reward, double committed_share, double discount_rate) {
                 MarketParams p{arrival_rate, capacity,        operating_cost,
                                block_reward, committed_share, discount_rate};
                 p.validate();
                 return p;
             }),
             py::arg("arrival_rate") = 1.2, py::arg("capacity") = 1.0,
             py::arg("operating_cost") = 0.0, py::arg("block_reward") = 0.0,
             py::arg("committed_share") = 0.0, py::arg("discount_rate") = 1.0)
        .def_readwrite("arrival_rate", &MarketParams::arrival_rate)
        .def_readwrite("capacity", &MarketParams::capacity)
        .def_readwrite("operating_cost", &MarketParams::operating_cost)
        .def_readwrite("block_reward", &MarketParams::block_reward)
        .def_readwrite("committed_share", &MarketParams::committed_share)
        .def_readwrite("discount_rate", &MarketParams::discount_rate);

    py::class_<ThresholdTime>(m, "ThresholdTime")
        .def_static("finite", &ThresholdTime::finite, py::arg("value"))
        .def_static("never_suspend", &ThresholdTime::never_suspend)
        .def_static("never_operate", &ThresholdTime::never_operate)
        .def_property_readonly("is_finite", &ThresholdTime::is_finite)
        .def_property_readonly("value",
                               [](const ThresholdTime& t) -> py::object {
                                   if (t.is_finite()) return py::float_(t.value);
                                   return py::none();
                               })
        .def("__eq__", [](const ThresholdTime& a, const ThresholdTime& b) { return a == b; })
        .def("__repr__", &threshold_repr);

    py::class_<BidCurve>(m, "BidCurve")
        .def_readonly("grid", &BidCurve::grid)
        .def_readonly("values", &BidCurve::values);

    // Numeric kernels.
    m.def("bisect",
          [](const std::function<double(double)>& f, double lo, double hi,
             const Tolerance& tol) { return num::bisect(f, lo, hi, tol); },
          py::arg("f"), py::arg("lo"), py::arg("hi"), py::arg("tol") = Tolerance{});
    m.def("integrate",
          [](const std::function<double(double)>& f, double a, double b,
             const Tolerance& tol, const std::vector<double>& breakpoints) {
              return num::integrate(f, a, b, tol, breakpoints);
          },
          py::arg("f"), py::arg("a"), py::arg("b"), py::arg("tol") = Tolerance{},
          py::arg("breakpoints") = std::vector<double>{});

    py::class_<num::Pcg32>(m, "Pcg32")
        .def(py::init<RandomSource>(), py::arg("random_source"))
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"),
             py::arg("stream_id") = 0)
        .def("next_u32", &num::Pcg32::next_u32)
        .def("next_double", &num::Pcg32::next_double);
    m.def("sample_exponential", &num::sample_exponential, py::arg("rng"), py::arg("rate"));

    // User-competition model.
    auto m_uc = m.def_submodule("uc", "Always-operating-miner market closed forms");
    m_uc.def("validation_probability", &uc::validation_probability, py::arg("s"),
             py::arg("params"));
    m_uc.def("equilibrium_bid", &uc::equilibrium_bid, py::arg("t"), py::arg("params"));
    m_uc.def("user_payoff", &uc::user_payoff, py::arg("t"), py::arg("params"));
    m_uc.def("user_welfare", &uc::user_welfare, py::arg("params"));
    m_uc.def("miner_revenue_flow", &uc::miner_revenue_flow, py::arg("t"), py::arg("params"));
    m_uc.def("miner_revenue", &uc::miner_revenue, py::arg("params"));
    m_uc.def("stationary_cdf", &uc::stationary_cdf, py::arg("t"), py::arg("params"));
    m_uc.def("sample_bid_curve", &uc::sample_bid_curve, py::arg("params"), py::arg("t_max"),
             py::arg("n_points"));

    // Endogenous-operation model.
    auto m_eo = m.def_submodule("eo", "Endogenous miner operation: thresholds and welfare");
    py::class_<eo::WelfareReport>(m_eo, "WelfareReport")
        .def_readonly("t_E", &eo::WelfareReport::t_E)
        .def_readonly("t_O", &eo::WelfareReport::t_O)
        .def_property_readonly("y_O",
                               [](const eo::WelfareReport& r) -> py::object {
                                   if (r.y_O.has_value()) return py::float_(*r.y_O);
                                   return py::none();
                               })
        .def_readonly("sw_at_tE", &eo::WelfareReport::sw_at_tE)
        .def_readonly("sw_at_tO", &eo::WelfareReport::sw_at_tO)
        .def_readonly("user_welfare", &eo::WelfareReport::user_welfare)
        .def_readonly("miner_surplus_at_tE", &eo::WelfareReport::miner_surplus_at_tE);
    py::enum_<eo::SweepParameter>(m_eo, "SweepParameter")
        .value("arrival_rate", eo::SweepParameter::arrival_rate)
        .value("capacity", eo::SweepParameter::capacity)
        .value("operating_cost", eo::SweepParameter::operating_cost)
        .value("block_reward", eo::SweepParameter::block_reward);
    py::class_<eo::SweepRow>(m_eo, "SweepRow")
        .def_readonly("parameter", &eo::SweepRow::parameter)
        .def_readonly("valid", &eo::SweepRow::valid)
        .def_readonly("error", &eo::SweepRow::error)
        .def_readonly("t_E", &eo::SweepRow::t_E)
        .def_readonly("t_O", &eo::SweepRow::t_O)
        .def_property_readonly("y_O",
                               [](const eo::SweepRow& r) -> py::object {
                                   if (r.y_O.has_value()) return py::float_(*r.y_O);
                                   return py::none();
                               })
        .def_readonly("sw", &eo::SweepRow::sw);
    py::class_<eo::SweepTable>(m_eo, "SweepTable")
        .def_readonly("rows", &eo::SweepTable::rows);
    m_eo.def("validation_probability", &eo::validation_probability, py::arg("s"),
             py::arg("lead"), py::arg("params"));
    m_eo.def("equilibrium_bid", &eo::equilibrium_bid, py::arg("t"), py::arg("tstar"),
             py::arg("params"));
    m_eo.def("miner_surplus", &eo::miner_surplus, py::arg("tstar"), py::arg("params"));
    m_eo.def("block_fee_income", &eo::block_fee_income, py::arg("t"), py::arg("tstar"),
             py::arg("params"));
    m_eo.def("equilibrium_threshold", &eo::equilibrium_threshold, py::arg("params"));
    m_eo.def("stationary_density", &eo::stationary_density, py::arg("t"), py::arg("tstar"),
             py::arg("params"));
    m_eo.def("stationary_cdf", &eo::stationary_cdf, py::arg("t"), py::arg("tstar"),
             py::arg("params"));
    m_eo.def("social_welfare", &eo::social_welfare, py::arg("tstar"), py::arg("params"));
    m_eo.def("user_welfare", &eo::user_welfare, py::arg("tstar"), py::arg("params"));
    m_eo.def("efficient_threshold", &eo::efficient_threshold, py::arg("params"));
    m_eo.def("optimal_block_reward", &eo::optimal_block_reward, py::arg("params"));
    m_eo.def("solve", &eo::solve, py::arg("params"));
    m_eo.def("sweep", &eo::sweep, py::arg("params"), py::arg("parameter"), py::arg("grid"),
             py::arg("threads") = 1);

    // Discrete-event simulator.
    auto m_sim = m.def_submodule("sim", "Monte Carlo discrete-event simulation");
    py::class_<sim::SimConfig>(m_sim, "SimConfig")
        .def(py::init([](long n_blocks, double dt, long burn_in, RandomSource rs,
                         int threads, int hist_bins, double hist_max) {
                 return sim::SimConfig{n_blocks, dt, burn_in, rs, threads, hist_bins,
                                       hist_max};
             }),
             py::arg("n_blocks") = 100000, py::arg("dt") = 1e-3, py::arg("burn_in") = 100,
             py::arg("rs") = RandomSource{}, py::arg("threads") = 1,
             py::arg("hist_bins") = 400, py::arg("hist_max") = 0.0)
        .def_readwrite("n_blocks", &sim::SimConfig::n_blocks)
        .def_readwrite("dt", &sim::SimConfig::dt)
        .def_readwrite("burn_in", &sim::SimConfig::burn_in)
        .def_readwrite("rs", &sim::SimConfig::rs)
        .def_readwrite("threads", &sim::SimConfig::threads)
        .def_readwrite("hist_bins", &sim::SimConfig::hist_bins)
        .def_readwrite("hist_max", &sim::SimConfig::hist_max);
    py::class_<sim::SimStats>(m_sim, "SimStats")
        .def_readonly("hist_edges", &sim::SimStats::hist_edges)
        .def_readonly("hist_mass", &sim::SimStats::hist_mass)
        .def_readonly("user_welfare_hat", &sim::SimStats::user_welfare_hat)
        .def_readonly("user_welfare_se", &sim::SimStats::user_welfare_se)
        .def_readonly("miner_revenue_hat", &sim::SimStats::miner_revenue_hat)
        .def_readonly("miner_revenue_se", &sim::SimStats::miner_revenue_se)
        .def_readonly("miner_profit_flow_hat", &sim::SimStats::miner_profit_flow_hat)
        .def_readonly("miner_profit_flow_se", &sim::SimStats::miner_profit_flow_se)
        .def_readonly("mean_block_fee_hat", &sim::SimStats::mean_block_fee_hat)
        .def_readonly("mean_block_fee_se", &sim::SimStats::mean_block_fee_se)
        .def_readonly("ks_distance", &sim::SimStats::ks_distance)
        .def_readonly("seed", &sim::SimStats::seed)
        .def_readonly("stream_id", &sim::SimStats::stream_id)
        .def_readonly("n_blocks_recorded", &sim::SimStats::n_blocks_recorded)
        .def_readonly("total_time", &sim::SimStats::total_time);
    py::class_<sim::ScanResult>(m_sim, "ScanResult")
        .def_readonly("s", &sim::ScanResult::s)
        .def_readonly("payoff", &sim::ScanResult::payoff)
        .def_readonly("argmax_index", &sim::ScanResult::argmax_index)
        .def_readonly("argmax_s", &sim::ScanResult::argmax_s);
    m_sim.def("simulate_uc", &sim::simulate_uc, py::arg("params"), py::arg("config"),
              py::call_guard<py::gil_scoped_release>());
    m_sim.def("simulate_eo", &sim::simulate_eo, py::arg("params"), py::arg("tstar"),
              py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m_sim.def("best_response_scan", &sim::best_response_scan, py::arg("t"), py::arg("tstar"),
              py::arg("params"), py::arg("n_points"));

    // Patient-user model.
    auto m_pat = m.def_submodule("patient", "Patient users: discount curve and bids");
    py::class_<pat::DiscountCurve>(m_pat, "DiscountCurve")
        .def_readonly("grid", &pat::DiscountCurve::grid)
        .def_readonly("estimate", &pat::DiscountCurve::estimate)
        .def_readonly("std_error", &pat::DiscountCurve::std_error)
        .def_readonly("n_paths", &pat::DiscountCurve::n_paths);
    py::class_<pat::OdeResidualReport>(m_pat, "OdeResidualReport")
        .def_readonly("s", &pat::OdeResidualReport::s)
        .def_readonly("residual", &pat::OdeResidualReport::residual)
        .def_readonly("noise", &pat::OdeResidualReport::noise)
        .def_readonly("grid_step", &pat::OdeResidualReport::grid_step)
        .def_readonly("kink_guard", &pat::OdeResidualReport::kink_guard)
        .def_readonly("n_pass_5sigma", &pat::OdeResidualReport::n_pass_5sigma)
        .def_readonly("pass_fraction", &pat::OdeResidualReport::pass_fraction);
    py::class_<pat::PatientScan>(m_pat, "PatientScan")
        .def_readonly("s", &pat::PatientScan::s)
        .def_readonly("payoff", &pat::PatientScan::payoff)
        .def_readonly("payoff_se", &pat::PatientScan::payoff_se)
        .def_readonly("argmax_index", &pat::PatientScan::argmax_index)
        .def_readonly("argmax_s", &pat::PatientScan::argmax_s);
    m_pat.def("estimate_wtilde", &pat::estimate_wtilde, py::arg("params"), py::arg("grid"),
              py::arg("n_paths"), py::arg("rs"), py::arg("n_max_blocks") = 200,
              py::call_guard<py::gil_scoped_release>());
    m_pat.def("interpolate", &pat::interpolate, py::arg("curve"), py::arg("s"));
    m_pat.def("wtilde_ode_residual", &pat::wtilde_ode_residual, py::arg("curve"),
              py::arg("params"), py::arg("kink_guard"));
    m_pat.def("patient_bid", &pat::patient_bid, py::arg("t"), py::arg("curve"));
    m_pat.def("patient_payoff_scan", &pat::patient_payoff_scan, py::arg("t"),
              py::arg("curve"), py::arg("n_points"));

    m.attr("__version__") = "0.1.0";
}
