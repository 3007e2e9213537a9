#pragma once

#include "cbfmt/channel.hpp"
#include "cbfmt/filterbank.hpp"
#include "cbfmt/metrics.hpp"
#include "cbfmt/orthogonality.hpp"
#include "cbfmt/pulse_design.hpp"

#include <json.hpp>
#include <iosfwd>
#include <string>

namespace cbfmt::io {

using Json = nlohmann::ordered_json;

struct PulseMetadata {
    std::string designer = "unknown";
    std::string metric = "none";
    std::uint64_t seed = 0;
};

struct PulseFile {
    PrototypePulse pulse;
    PulseMetadata meta;
};

Json params_json(const FilterBankParams& p);
Json pulse_json(const PrototypePulse& pulse, const PulseMetadata& meta);
// throws std::runtime_error with the parser's line/column on malformed input
PulseFile pulse_from_json(const Json& j, int mu = 0, double T = 1.0);
void write_pulse(const std::string& path, const PrototypePulse& pulse, const PulseMetadata& meta);
PulseFile read_pulse(const std::string& path, int mu = 0, double T = 1.0);

Json orth_report_json(const OrthReport& rep, const FilterBankParams& params);
Json channel_json(const ChannelRealization& ch);
ChannelRealization channel_from_json(const Json& j);
Json link_report_json(const LinkReport& rep);

void write_restart_csv(std::ostream& os, const std::vector<RestartRecord>& rows);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

// shortest text that round-trips the double, '.' decimal regardless of locale
std::string format_double(double v);

} // namespace cbfmt::io
