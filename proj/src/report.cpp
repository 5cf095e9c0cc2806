// SPDX-License-Identifier: Apache-2.0
//
// nfmusic: near-field / far-field MUSIC mismatch simulator
// Copyright (C) 2026 The nfmusic authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#include "nfmusic/harness.hpp"

#include "format.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace nfmusic
{
    using detail::format_number;

    // --------------------------------------------------------------------- CSV

    std::string csv_row(const MismatchResult &r)
    {
        auto opt = [](const std::optional<double> &v) { return v ? format_number(*v) : std::string(); };
        std::string row;
        row += r.key.scenario.label();
        row += ',' + format_number(r.key.carrier_frequency_hz);
        row += ',' + std::to_string(r.key.n_elements);
        row += ',' + format_number(r.key.snr_db);
        row += ',' + format_number(r.key.distance_m);
        row += ',' + format_number(r.fraunhofer_m);
        row += ',' + format_number(r.azimuth_rms_deg);
        row += ',' + format_number(r.elevation_rms_deg);
        row += ',' + opt(r.range_rms_m);
        row += ',' + opt(r.range_rel_rms);
        row += ',' + std::to_string(r.n_trials);
        row += ',' + std::to_string(r.n_failed);
        return row;
    }

    void write_results_csv(const std::filesystem::path &path, const std::vector<MismatchResult> &results)
    {
        if (results.empty())
            throw InvalidArgument("write_results_csv: no results");
        // Write beside the target, then rename, so readers never see a torn file.
        std::filesystem::path tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out)
                throw IoError("cannot write " + tmp.string());
            out << results_csv_header << '\n';
            for (const auto &r : results)
                out << csv_row(r) << '\n';
            out.flush();
            if (!out)
                throw IoError("write failed: " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
            throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }

    std::vector<MismatchResult> read_results_csv(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open " + path.string());
        std::string line;
        if (!std::getline(in, line) || line != results_csv_header)
            throw IoError(path.string() + ": missing or unexpected header");

        std::vector<MismatchResult> results;
        int line_no = 1;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty())
                continue;
            const auto f = detail::split(line, ',');
            try
            {
                if (f.size() != 12)
                    throw InvalidArgument("expected 12 fields, found " + std::to_string(f.size()));
                auto as_int = [](const std::string &s)
                {
                    const double v = detail::parse_double(s);
                    if (v != std::floor(v))
                        throw InvalidArgument("not an integer: '" + s + "'");
                    return static_cast<int>(v);
                };
                auto as_opt = [](const std::string &s) -> std::optional<double>
                {
                    if (s.empty())
                        return std::nullopt;
                    return detail::parse_double(s);
                };
                MismatchResult r;
                r.key.scenario = Scenario::parse(f[0]);
                r.key.carrier_frequency_hz = detail::parse_double(f[1]);
                r.key.n_elements = as_int(f[2]);
                r.key.snr_db = detail::parse_double(f[3]);
                r.key.distance_m = detail::parse_double(f[4]);
                r.fraunhofer_m = detail::parse_double(f[5]);
                r.azimuth_rms_deg = detail::parse_double(f[6]);
                r.elevation_rms_deg = detail::parse_double(f[7]);
                r.range_rms_m = as_opt(f[8]);
                r.range_rel_rms = as_opt(f[9]);
                r.n_trials = as_int(f[10]);
                r.n_failed = as_int(f[11]);
                results.push_back(std::move(r));
            }
            catch (const InvalidArgument &e)
            {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        return results;
    }

    // ------------------------------------------------------------------ Metric

    std::string_view to_string(Metric m)
    {
        switch (m)
        {
        case Metric::AzimuthRms:
            return "azimuth_rms";
        case Metric::ElevationRms:
            return "elevation_rms";
        case Metric::RangeRms:
            return "range_rms";
        case Metric::RangeRelRms:
            return "range_rel_rms";
        }
        return "?";
    }

    Metric parse_metric(std::string_view text)
    {
        for (const Metric m : {Metric::AzimuthRms, Metric::ElevationRms, Metric::RangeRms, Metric::RangeRelRms})
            if (text == to_string(m))
                return m;
        throw InvalidArgument("unknown metric '" + std::string(text) +
                              "' (expected azimuth_rms, elevation_rms, range_rms or range_rel_rms)");
    }

    std::optional<double> metric_value(const MismatchResult &r, Metric m)
    {
        switch (m)
        {
        case Metric::AzimuthRms:
            return r.azimuth_rms_deg;
        case Metric::ElevationRms:
            return r.elevation_rms_deg;
        case Metric::RangeRms:
            return r.range_rms_m;
        case Metric::RangeRelRms:
            return r.range_rel_rms;
        }
        return std::nullopt;
    }

    // -------------------------------------------------------------------- Plot

    namespace
    {
        std::string_view metric_axis_label(Metric m)
        {
            switch (m)
            {
            case Metric::AzimuthRms:
                return "azimuth RMS error (deg)";
            case Metric::ElevationRms:
                return "elevation RMS error (deg)";
            case Metric::RangeRms:
                return "range RMS error (m)";
            case Metric::RangeRelRms:
                return "relative range RMS error";
            }
            return "";
        }

        std::string_view series_colour(int ordinal)
        {
            static constexpr std::array<std::string_view, 4> colours{"#1f77b4", "#2ca02c", "#d62728", "#ff7f0e"};
            return colours[static_cast<std::size_t>(ordinal)];
        }

        std::string_view series_dash(int ordinal)
        {
            static constexpr std::array<std::string_view, 4> dashes{"none", "8 3", "2 2", "8 3 2 3"};
            return dashes[static_cast<std::size_t>(ordinal)];
        }

        std::string fmt(double v, int precision = 2)
        {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.*f", precision, v);
            return buf;
        }

        std::string tick_label(double v)
        {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%g", v);
            return buf;
        }

        std::string xml_escape(std::string_view s)
        {
            std::string out;
            for (const char c : s)
            {
                switch (c)
                {
                case '&':
                    out += "&amp;";
                    break;
                case '<':
                    out += "&lt;";
                    break;
                case '>':
                    out += "&gt;";
                    break;
                case '"':
                    out += "&quot;";
                    break;
                default:
                    out += c;
                }
            }
            return out;
        }

        // 1, 2 or 5 times a power of ten, at least raw.
        double nice_step(double raw)
        {
            const double p = std::pow(10.0, std::floor(std::log10(raw)));
            for (const double m : {1.0, 2.0, 5.0, 10.0})
                if (m * p >= raw * (1.0 - 1e-12))
                    return m * p;
            return 10.0 * p;
        }
    }

    std::string render_plot(const std::vector<MismatchResult> &results, const PlotSpec &spec)
    {
        if (results.empty())
            throw InvalidArgument("emit_plot: no results");
        const CaseKey &k0 = results.front().key;
        for (const auto &r : results)
            if (r.key.carrier_frequency_hz != k0.carrier_frequency_hz || r.key.n_elements != k0.n_elements ||
                r.key.snr_db != k0.snr_db)
                throw InvalidArgument("emit_plot: results mix several (f_c, N_U, SNR) combinations");
        const double df = results.front().fraunhofer_m;

        std::map<int, std::vector<std::pair<double, double>>> series;
        double y_min = std::numeric_limits<double>::infinity();
        double y_max = -std::numeric_limits<double>::infinity();
        double x_min = df, x_max = df;
        for (const auto &r : results)
        {
            x_min = std::min(x_min, r.key.distance_m);
            x_max = std::max(x_max, r.key.distance_m);
            const auto v = metric_value(r, spec.y);
            if (!v)
                continue; // the beamformer has no such metric
            auto &pts = series[r.key.scenario.ordinal()];
            if (!std::isfinite(*v) || (spec.log_y && *v <= 0.0))
                continue;
            pts.emplace_back(r.key.distance_m, *v);
            y_min = std::min(y_min, *v);
            y_max = std::max(y_max, *v);
        }
        for (auto &[ordinal, pts] : series)
            std::sort(pts.begin(), pts.end());

        constexpr double width = 760, height = 480;
        constexpr double left = 80, right = 190, top = 50, bottom = 60;
        constexpr double plot_w = width - left - right, plot_h = height - top - bottom;

        const double lx0 = std::floor(std::log10(x_min));
        const double lx1 = std::max(lx0 + 1.0, std::ceil(std::log10(x_max)));
        auto px = [&](double x) { return left + (std::log10(x) - lx0) / (lx1 - lx0) * plot_w; };

        const bool have_y = std::isfinite(y_min);
        double y0, y1;
        if (spec.log_y)
        {
            y0 = have_y ? std::floor(std::log10(y_min)) : 0.0;
            y1 = have_y ? std::max(y0 + 1.0, std::ceil(std::log10(y_max))) : 1.0;
        }
        else
        {
            y0 = 0.0;
            const double top_value = have_y && y_max > 0.0 ? y_max : 1.0;
            const double step = nice_step(top_value / 5.0);
            y1 = std::ceil(top_value / step - 1e-9) * step;
        }
        auto py = [&](double y)
        {
            const double t = spec.log_y ? (std::log10(y) - y0) / (y1 - y0) : (y - y0) / (y1 - y0);
            return top + (1.0 - t) * plot_h;
        };

        std::ostringstream svg;
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
            << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

        std::string title = spec.title;
        if (title.empty())
            title = "f_c = " + tick_label(k0.carrier_frequency_hz / 1e9) + " GHz, N_U = " + std::to_string(k0.n_elements) +
                    ", SNR = " + tick_label(k0.snr_db) + " dB";
        svg << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">"
            << xml_escape(title) << "</text>\n";

        // Grid and ticks.
        svg << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
        for (int e = static_cast<int>(lx0); e < static_cast<int>(lx1); ++e)
            for (int m = 2; m <= 9; ++m)
            {
                const double x = px(m * std::pow(10.0, e));
                svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(x) << "\" y2=\""
                    << fmt(top + plot_h) << "\" stroke=\"#f0f0f0\"/>\n";
            }
        for (int e = static_cast<int>(lx0); e <= static_cast<int>(lx1); ++e)
        {
            const double x = px(std::pow(10.0, e));
            svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(x) << "\" y2=\""
                << fmt(top + plot_h) << "\"/>\n";
        }
        std::vector<double> y_ticks;
        if (spec.log_y)
            for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e)
                y_ticks.push_back(std::pow(10.0, e));
        else
        {
            const double step = nice_step((y1 - y0) / 5.0);
            for (double y = y0; y <= y1 + step * 1e-9; y += step)
                y_ticks.push_back(y);
        }
        for (const double y : y_ticks)
            svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(py(y)) << "\" x2=\"" << fmt(left + plot_w)
                << "\" y2=\"" << fmt(py(y)) << "\"/>\n";
        svg << "</g>\n";

        svg << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(plot_w) << "\" height=\""
            << fmt(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int e = static_cast<int>(lx0); e <= static_cast<int>(lx1); ++e)
            svg << "<text x=\"" << fmt(px(std::pow(10.0, e))) << "\" y=\"" << fmt(top + plot_h + 18)
                << "\" text-anchor=\"middle\">" << tick_label(std::pow(10.0, e)) << "</text>\n";
        for (const double y : y_ticks)
            svg << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(py(y) + 4) << "\" text-anchor=\"end\">"
                << tick_label(y) << "</text>\n";
        svg << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"" << fmt(height - 15)
            << "\" text-anchor=\"middle\">distance (m)</text>\n";
        svg << "<text transform=\"translate(22 " << fmt(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
            << metric_axis_label(spec.y) << "</text>\n";

        // Fraunhofer marker.
        const double xf = px(df);
        svg << "<line x1=\"" << fmt(xf) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(xf) << "\" y2=\""
            << fmt(top + plot_h) << "\" stroke=\"black\" stroke-width=\"1.2\" stroke-dasharray=\"6 4\"/>\n";
        svg << "<text x=\"" << fmt(xf + 4) << "\" y=\"" << fmt(top + 14) << "\">d_f = " << tick_label(df) << " m</text>\n";

        // Series.
        for (const auto &[ordinal, pts] : series)
        {
            const auto colour = series_colour(ordinal);
            if (pts.size() > 1)
            {
                svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.8\"";
                if (series_dash(ordinal) != "none")
                    svg << " stroke-dasharray=\"" << series_dash(ordinal) << "\"";
                svg << " points=\"";
                for (std::size_t i = 0; i < pts.size(); ++i)
                    svg << (i ? " " : "") << fmt(px(pts[i].first)) << ',' << fmt(py(pts[i].second));
                svg << "\"/>\n";
            }
            for (const auto &[x, y] : pts)
                svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\"3\" fill=\"" << colour
                    << "\"/>\n";
        }

        // Legend.
        double ly = top + 10;
        const double lx = left + plot_w + 20;
        for (const auto &[ordinal, pts] : series)
        {
            svg << "<g class=\"legend-entry\">";
            svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 28) << "\" y2=\"" << fmt(ly)
                << "\" stroke=\"" << series_colour(ordinal) << "\" stroke-width=\"1.8\"";
            if (series_dash(ordinal) != "none")
                svg << " stroke-dasharray=\"" << series_dash(ordinal) << "\"";
            svg << "/><text x=\"" << fmt(lx + 36) << "\" y=\"" << fmt(ly + 4) << "\">"
                << xml_escape(Scenario::all()[static_cast<std::size_t>(ordinal)].label()) << "</text></g>\n";
            ly += 22;
        }
        svg << "</svg>\n";
        return svg.str();
    }

    void emit_plot(const std::filesystem::path &path, const std::vector<MismatchResult> &results, const PlotSpec &spec)
    {
        const std::string text = render_plot(results, spec);
        std::ofstream out(path, std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + path.string());
        out << text;
        out.flush();
        if (!out)
            throw IoError("write failed: " + path.string());
    }

    // ------------------------------------------------------------------ Claims

    namespace
    {
        constexpr double claim_fc = 3e9;
        constexpr int claim_n_u = 64;
        constexpr double claim_snr = 30.0;
        constexpr double exact_bound_deg = 0.125;

        std::vector<const MismatchResult *> curve(const std::vector<MismatchResult> &results, int ordinal, int n_u)
        {
            std::vector<const MismatchResult *> out;
            for (const auto &r : results)
                if (r.key.scenario.ordinal() == ordinal && r.key.carrier_frequency_hz == claim_fc &&
                    r.key.n_elements == n_u && r.key.snr_db == claim_snr)
                    out.push_back(&r);
            std::sort(out.begin(), out.end(), [](auto *a, auto *b) { return a->key.distance_m < b->key.distance_m; });
            return out;
        }

        const MismatchResult *at(const std::vector<const MismatchResult *> &c, double d)
        {
            for (auto *r : c)
                if (r->key.distance_m == d)
                    return r;
            return nullptr;
        }

        std::string num(double v) { return tick_label(v); }

        // a and b within a factor of two of each other (both zero counts).
        bool within_2x(double a, double b) { return std::max(a, b) <= 2.0 * std::min(a, b); }

        ClaimCheck verdict(std::string name, bool ok, std::string detail)
        {
            return {std::move(name), ok ? ClaimStatus::Pass : ClaimStatus::Fail, std::move(detail)};
        }

        ClaimCheck skipped(std::string name, std::string why) { return {std::move(name), ClaimStatus::Skipped, std::move(why)}; }

        ClaimCheck exactness(const std::string &name, const std::vector<const MismatchResult *> &c)
        {
            bool ok = true;
            double worst_az = 0.0, worst_el = 0.0;
            for (auto *r : c)
            {
                ok = ok && !r->failed() && r->azimuth_rms_deg <= exact_bound_deg && r->elevation_rms_deg <= exact_bound_deg;
                worst_az = std::max(worst_az, r->azimuth_rms_deg);
                worst_el = std::max(worst_el, r->elevation_rms_deg);
                if (std::isnan(r->azimuth_rms_deg) || std::isnan(r->elevation_rms_deg))
                    ok = false;
            }
            return verdict(name, ok,
                           "N_U=" + std::to_string(c.front()->key.n_elements) + ": " + std::to_string(c.size()) +
                               " distances, worst az " + num(worst_az) + " deg, worst el " + num(worst_el) +
                               " deg (bound " + num(exact_bound_deg) + ")");
        }

        bool any_failed(std::initializer_list<const MismatchResult *> rs)
        {
            for (auto *r : rs)
                if (r->failed() || std::isnan(r->angular_rms_deg()))
                    return true;
            return false;
        }
    }

    std::vector<ClaimCheck> check_claims(const std::vector<MismatchResult> &results)
    {
        std::vector<ClaimCheck> out;
        const auto nf = curve(results, 0, claim_n_u);
        const auto anm = curve(results, 1, claim_n_u);
        const auto ffnf = curve(results, 2, claim_n_u);

        // matched_near_field
        if (nf.empty())
            out.push_back(skipped("matched_near_field", "no NF/NF results at 3 GHz, N_U=64, 30 dB"));
        else
            out.push_back(exactness("matched_near_field", nf));

        // matched_far_field, for every N_U present at 3 GHz / 30 dB.
        {
            std::vector<int> sizes;
            for (const auto &r : results)
                if (r.key.scenario.ordinal() == 3 && r.key.carrier_frequency_hz == claim_fc && r.key.snr_db == claim_snr)
                    sizes.push_back(r.key.n_elements);
            std::sort(sizes.begin(), sizes.end());
            sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
            if (sizes.empty())
                out.push_back(skipped("matched_far_field", "no FF/FF results at 3 GHz, 30 dB"));
            else
            {
                bool ok = true;
                std::string detail;
                for (const int n : sizes)
                {
                    const auto ff = curve(results, 3, n);
                    const ClaimCheck part = exactness("", ff);
                    ok = ok && part.status == ClaimStatus::Pass;
                    detail += (detail.empty() ? "" : "; ") + part.detail;
                    // Below d_f the matched far-field error must undercut the mismatched one.
                    const auto mismatched = curve(results, 2, n);
                    if (!mismatched.empty() && !ff.empty())
                    {
                        const double d = ff.front()->key.distance_m;
                        const MismatchResult *m = at(mismatched, d);
                        if (m && d < ff.front()->fraunhofer_m)
                        {
                            const bool below = ff.front()->angular_rms_deg() < m->angular_rms_deg();
                            ok = ok && below && !any_failed({ff.front(), m});
                            detail += ", at " + num(d) + " m FF/FF " + num(ff.front()->angular_rms_deg()) + " vs FF-on-NF " +
                                      num(m->angular_rms_deg()) + " deg";
                        }
                    }
                }
                out.push_back(verdict("matched_far_field", ok, detail));
            }
        }

        // mismatch_convergence and near_field_penalty.
        if (nf.empty() || ffnf.empty())
        {
            out.push_back(skipped("mismatch_convergence", "needs NF/NF and FF-on-NF at 3 GHz, N_U=64"));
            out.push_back(skipped("near_field_penalty", "needs NF/NF and FF-on-NF at 3 GHz, N_U=64"));
        }
        else
        {
            const double d_far = nf.back()->key.distance_m;
            const MismatchResult *a = at(ffnf, d_far);
            if (!a)
                out.push_back(skipped("mismatch_convergence", "no FF-on-NF result at " + num(d_far) + " m"));
            else
            {
                const double e_ff = a->angular_rms_deg(), e_nf = nf.back()->angular_rms_deg();
                out.push_back(verdict("mismatch_convergence", !any_failed({a, nf.back()}) && within_2x(e_ff, e_nf),
                                      "at " + num(d_far) + " m FF-on-NF " + num(e_ff) + " deg vs NF/NF " + num(e_nf) +
                                          " deg (d_f " + num(a->fraunhofer_m) + " m)"));
            }

            const double d_near = nf.front()->key.distance_m;
            const MismatchResult *b = at(ffnf, d_near);
            if (!b)
                out.push_back(skipped("near_field_penalty", "no FF-on-NF result at " + num(d_near) + " m"));
            else
            {
                const double e_ff = b->angular_rms_deg(), e_nf = nf.front()->angular_rms_deg();
                out.push_back(verdict("near_field_penalty", !any_failed({b, nf.front()}) && e_ff > e_nf && e_ff >= 10.0 * e_nf,
                                      "at " + num(d_near) + " m FF-on-NF " + num(e_ff) + " deg vs NF/NF " + num(e_nf) +
                                          " deg (need >= 10x)"));
            }
        }

        // range_regime_flip
        if (nf.empty())
            out.push_back(skipped("range_regime_flip", "no NF/NF results at 3 GHz, N_U=64"));
        else
        {
            const double df = nf.front()->fraunhofer_m;
            const MismatchResult *far = nf.back();
            double worst = 0.0;
            bool ok = true;
            int n_below = 0;
            for (auto *r : nf)
                if (r->key.distance_m < df)
                {
                    ++n_below;
                    const double v = r->range_rel_rms.value_or(std::nan(""));
                    ok = ok && !r->failed() && v <= 0.05;
                    worst = std::max(worst, v);
                }
            if (n_below == 0 || far->key.distance_m <= df)
                out.push_back(skipped("range_regime_flip", "needs distances on both sides of d_f"));
            else
            {
                const double v_far = far->range_rel_rms.value_or(std::nan(""));
                ok = ok && !far->failed() && v_far > worst && v_far >= 5.0 * worst;
                out.push_back(verdict("range_regime_flip", ok,
                                      "worst below d_f " + num(worst) + " (bound 0.05), at " + num(far->key.distance_m) +
                                          " m " + num(v_far) + " (need >= 5x)"));
            }
        }

        // anm_ordering
        if (nf.empty() || anm.empty())
            out.push_back(skipped("anm_ordering", "needs NF/NF and ANM-on-NF at 3 GHz, N_U=64"));
        else
        {
            const MismatchResult *n0 = nf.front(), *n1 = nf.back();
            const MismatchResult *a0 = at(anm, n0->key.distance_m), *a1 = at(anm, n1->key.distance_m);
            if (!a0 || !a1)
                out.push_back(skipped("anm_ordering", "ANM-on-NF lacks the smallest or largest distance"));
            else
            {
                const double r_anm = a0->range_rel_rms.value_or(std::nan(""));
                const double r_nf = n0->range_rel_rms.value_or(std::nan(""));
                const bool near_ok = a0->angular_rms_deg() >= n0->angular_rms_deg() && r_anm >= r_nf;
                const bool far_ok = within_2x(a1->angular_rms_deg(), n1->angular_rms_deg());
                out.push_back(verdict("anm_ordering", !any_failed({n0, n1, a0, a1}) && near_ok && far_ok,
                                      "at " + num(n0->key.distance_m) + " m angle " + num(a0->angular_rms_deg()) + " vs " +
                                          num(n0->angular_rms_deg()) + " deg, range rel " + num(r_anm) + " vs " +
                                          num(r_nf) + "; at " + num(n1->key.distance_m) + " m angle " +
                                          num(a1->angular_rms_deg()) + " vs " + num(n1->angular_rms_deg()) + " deg"));
            }
        }
        return out;
    }
}
