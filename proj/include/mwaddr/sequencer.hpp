#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mwaddr/addressing.hpp"
#include "mwaddr/errors.hpp"
#include "mwaddr/fieldmodel.hpp"
#include "mwaddr/hyperfine.hpp"
#include "mwaddr/rng.hpp"
#include "mwaddr/spindynamics.hpp"
#include "mwaddr/trapmodel.hpp"
#include "mwaddr/units.hpp"

// Pulse-sequence language.  Line oriented, '#' comments, whitespace
// separated tokens, key=value arguments with unit suffixes (us, ms, s,
// Hz, kHz, MHz, rad, deg, and pi forms for angles).
//
//   name ramsey            # optional metadata, before instructions
//   seed 42
//   prepare dd
//   config B
//   pulse q2 angle=pi/2 phase=0rad detuning=-0.1kHz
//   config A
//   wait 13ms
//   detect
//   branch 1
//     pulse q2 angle=pi
//     detect
//   end
//
// Instruction payloads keep the script's external units (us, kHz, rad);
// conversion to SI/angular happens at execution.  This makes
// parse(format(p)) bit-exact.

namespace mwaddr::seq {

enum class Target { global, q1, q2 };

inline const char* target_name(Target t) {
  switch (t) {
    case Target::global: return "global";
    case Target::q1: return "q1";
    case Target::q2: return "q2";
  }
  return "?";
}

struct Prepare {
  std::array<bool, 2> up{false, false}; // per ion: prepared in |up>?
};

struct SetConfig {
  trap::Configuration config = trap::Configuration::A;
};

struct Pulse {
  Target target = Target::global;
  std::optional<double> rate_khz; // Rabi rate override, ordinary kHz
  double detuning_khz = 0;
  double phase_rad = 0;
  std::optional<double> duration_us;
  std::optional<double> angle_rad;
};

struct Wait {
  double duration_us = 0;
};

struct Detect {};

struct Instruction;

struct Branch {
  int bright_count = 0;
  std::vector<Instruction> body;
};

struct Instruction {
  std::variant<Prepare, SetConfig, Pulse, Wait, Detect, Branch> op;
  int line = 0;
};

struct SequenceProgram {
  std::string name;
  std::optional<uint64_t> seed;
  std::vector<Instruction> instructions;
};

// ---------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_number(const std::string& text, int line) {
  double value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw SyntaxError("malformed number '" + text + "'", line);
  return value;
}

// number + unit suffix; returns value converted to `canonical` units
inline double parse_with_unit(const std::string& text,
                              std::initializer_list<std::pair<const char*, double>> units,
                              const char* expected, int line) {
  for (const auto& [suffix, factor] : units) {
    const size_t n = std::string(suffix).size();
    if (text.size() > n && text.compare(text.size() - n, n, suffix) == 0) {
      // reject partial matches like "ms" when testing "s"
      const char before = text[text.size() - n - 1];
      if (!(std::isdigit(static_cast<unsigned char>(before)) || before == '.'))
        continue;
      return factor * parse_number(text.substr(0, text.size() - n), line);
    }
  }
  throw SyntaxError("expected a value with unit (" + std::string(expected) +
                        "), got '" + text + "'",
                    line);
}

inline double parse_duration_us(const std::string& text, int line) {
  const double us = parse_with_unit(
      text, {{"us", 1.0}, {"ms", 1e3}, {"s", 1e6}}, "us|ms|s", line);
  if (us < 0) throw ValidationError("durations must be non-negative", line);
  return us;
}

inline double parse_frequency_khz(const std::string& text, int line) {
  return parse_with_unit(
      text, {{"kHz", 1.0}, {"MHz", 1e3}, {"Hz", 1e-3}}, "Hz|kHz|MHz", line);
}

inline double parse_angle_rad(const std::string& text, int line) {
  // pi forms: pi, pi/2, 2pi, 0.5pi, 3pi/4 ...
  const size_t at = text.find("pi");
  if (at != std::string::npos) {
    double mult = 1.0;
    if (at > 0) mult = parse_number(text.substr(0, at), line);
    double divisor = 1.0;
    if (at + 2 < text.size()) {
      if (text[at + 2] != '/')
        throw SyntaxError("malformed angle '" + text + "'", line);
      divisor = parse_number(text.substr(at + 3), line);
      if (divisor == 0) throw SyntaxError("division by zero in angle", line);
    }
    return mult * units::pi / divisor;
  }
  return parse_with_unit(text, {{"rad", 1.0}, {"deg", units::pi / 180.0}},
                         "rad|deg|pi", line);
}

inline std::pair<std::string, std::string> split_key_value(const std::string& tok,
                                                           int line) {
  const size_t eq = tok.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size())
    throw SyntaxError("expected key=value, got '" + tok + "'", line);
  return {tok.substr(0, eq), tok.substr(eq + 1)};
}

inline Pulse parse_pulse(const std::vector<std::string>& tokens, int line) {
  if (tokens.size() < 2)
    throw SyntaxError("pulse requires a target (global|q1|q2)", line);
  Pulse p;
  if (tokens[1] == "global") p.target = Target::global;
  else if (tokens[1] == "q1") p.target = Target::q1;
  else if (tokens[1] == "q2") p.target = Target::q2;
  else throw ValidationError("unknown pulse target '" + tokens[1] + "'", line);

  for (size_t k = 2; k < tokens.size(); ++k) {
    const auto [key, value] = split_key_value(tokens[k], line);
    if (key == "rate") p.rate_khz = parse_frequency_khz(value, line);
    else if (key == "detuning") p.detuning_khz = parse_frequency_khz(value, line);
    else if (key == "phase") p.phase_rad = parse_angle_rad(value, line);
    else if (key == "duration") p.duration_us = parse_duration_us(value, line);
    else if (key == "angle") p.angle_rad = parse_angle_rad(value, line);
    else throw SyntaxError("unknown pulse argument '" + key + "'", line);
  }
  if (p.duration_us.has_value() == p.angle_rad.has_value())
    throw ValidationError("pulse requires exactly one of duration= or angle=", line);
  if (p.angle_rad && *p.angle_rad < 0)
    throw ValidationError("pulse angles must be non-negative", line);
  if (p.rate_khz && *p.rate_khz < 0)
    throw ValidationError("Rabi rates must be non-negative", line);
  return p;
}

} // namespace detail

inline SequenceProgram parse(const std::string& text) {
  SequenceProgram program;

  struct Frame {
    std::vector<Instruction>* list;
    int open_line;
  };
  std::vector<Frame> stack{{&program.instructions, 0}};

  bool any_instruction = false;
  bool have_prepare = false;
  bool have_detect = false;
  trap::Configuration config = trap::Configuration::A;

  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const auto tokens = detail::tokenize(raw);
    if (tokens.empty()) continue;
    const std::string& op = tokens[0];

    if (op == "name" || op == "seed") {
      if (any_instruction)
        throw ValidationError("metadata must precede instructions", line_no);
      if (tokens.size() != 2)
        throw SyntaxError(op + " takes exactly one argument", line_no);
      if (op == "name") program.name = tokens[1];
      else {
        uint64_t s = 0;
        const auto [p, ec] = std::from_chars(
            tokens[1].data(), tokens[1].data() + tokens[1].size(), s);
        if (ec != std::errc{} || p != tokens[1].data() + tokens[1].size())
          throw SyntaxError("malformed seed '" + tokens[1] + "'", line_no);
        program.seed = s;
      }
      continue;
    }

    any_instruction = true;
    Instruction inst;
    inst.line = line_no;

    if (op == "prepare") {
      if (tokens.size() != 2 || tokens[1].size() != 2)
        throw SyntaxError("prepare takes a two-letter state (e.g. dd, du)", line_no);
      Prepare prep;
      for (int ion = 0; ion < 2; ++ion) {
        const char c = tokens[1][static_cast<size_t>(ion)];
        if (c == 'd') prep.up[static_cast<size_t>(ion)] = false;
        else if (c == 'u') prep.up[static_cast<size_t>(ion)] = true;
        else throw ValidationError("prepare state must use 'd'/'u' letters", line_no);
      }
      have_prepare = true;
      inst.op = prep;
    } else if (op == "config") {
      if (tokens.size() != 2 || (tokens[1] != "A" && tokens[1] != "B"))
        throw SyntaxError("config takes A or B", line_no);
      const auto target = tokens[1] == "A" ? trap::Configuration::A
                                           : trap::Configuration::B;
      if (target == config)
        throw ValidationError("switch to the current configuration", line_no);
      config = target;
      inst.op = SetConfig{target};
    } else if (op == "pulse") {
      inst.op = detail::parse_pulse(tokens, line_no);
    } else if (op == "wait") {
      if (tokens.size() != 2) throw SyntaxError("wait takes a duration", line_no);
      inst.op = Wait{detail::parse_duration_us(tokens[1], line_no)};
    } else if (op == "detect") {
      if (tokens.size() != 1) throw SyntaxError("detect takes no arguments", line_no);
      if (!have_prepare)
        throw ValidationError("detect requires a preceding prepare", line_no);
      have_detect = true;
      inst.op = Detect{};
    } else if (op == "branch") {
      if (tokens.size() != 2)
        throw SyntaxError("branch takes a bright count (0|1|2)", line_no);
      if (!have_detect)
        throw ValidationError("branch requires a preceding detect", line_no);
      const double n = detail::parse_number(tokens[1], line_no);
      if (n != 0 && n != 1 && n != 2)
        throw ValidationError("branch bright count must be 0, 1 or 2", line_no);
      Branch br;
      br.bright_count = static_cast<int>(n);
      inst.op = std::move(br);
      stack.back().list->push_back(std::move(inst));
      stack.push_back(
          {&std::get<Branch>(stack.back().list->back().op).body, line_no});
      continue;
    } else if (op == "end") {
      if (stack.size() == 1)
        throw SyntaxError("'end' without an open branch", line_no);
      stack.pop_back();
      continue;
    } else {
      throw SyntaxError("unknown instruction '" + op + "'", line_no);
    }

    stack.back().list->push_back(std::move(inst));
  }

  if (stack.size() != 1)
    throw SyntaxError("unterminated branch", stack.back().open_line);
  return program;
}

// ---------------------------------------------------------------------
// Canonical rendering: parse(format(p)) is bit-exact.
// ---------------------------------------------------------------------

namespace detail {

inline std::string shortest(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, ptr);
}

inline void format_into(std::ostringstream& os,
                        const std::vector<Instruction>& list, int depth) {
  const std::string pad(static_cast<size_t>(2 * depth), ' ');
  for (const auto& inst : list) {
    os << pad;
    if (const auto* p = std::get_if<Prepare>(&inst.op)) {
      os << "prepare " << (p->up[0] ? 'u' : 'd') << (p->up[1] ? 'u' : 'd');
    } else if (const auto* c = std::get_if<SetConfig>(&inst.op)) {
      os << "config " << (c->config == trap::Configuration::A ? 'A' : 'B');
    } else if (const auto* pl = std::get_if<Pulse>(&inst.op)) {
      os << "pulse " << target_name(pl->target);
      if (pl->angle_rad) os << " angle=" << shortest(*pl->angle_rad) << "rad";
      if (pl->duration_us) os << " duration=" << shortest(*pl->duration_us) << "us";
      if (pl->rate_khz) os << " rate=" << shortest(*pl->rate_khz) << "kHz";
      if (pl->detuning_khz != 0)
        os << " detuning=" << shortest(pl->detuning_khz) << "kHz";
      if (pl->phase_rad != 0) os << " phase=" << shortest(pl->phase_rad) << "rad";
    } else if (const auto* w = std::get_if<Wait>(&inst.op)) {
      os << "wait " << shortest(w->duration_us) << "us";
    } else if (std::holds_alternative<Detect>(inst.op)) {
      os << "detect";
    } else if (const auto* b = std::get_if<Branch>(&inst.op)) {
      os << "branch " << b->bright_count << "\n";
      format_into(os, b->body, depth + 1);
      os << pad << "end";
    }
    os << "\n";
  }
}

} // namespace detail

inline std::string format(const SequenceProgram& program) {
  std::ostringstream os;
  os << "# mwaddr pulse sequence\n";
  if (!program.name.empty()) os << "name " << program.name << "\n";
  if (program.seed) os << "seed " << *program.seed << "\n";
  detail::format_into(os, program.instructions, 0);
  return os.str();
}

// ---------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------

enum class ExecutionMode { deterministic, sampled };

struct ModelBundle {
  hyperfine::LevelSet levels;
  addressing::QubitPair pair;
  field::BasisSet bases{};
  field::QuantizationAxis axis;
  trap::TrapParameters trap;
  field::DriveConfiguration addressed_drive{}; // used in configuration B
  Eigen::Vector2d ion2_offset = Eigen::Vector2d(0, 350e-9);
  double residual_floor = 0.42e-9;
  double micromotion_efficiency = 1.0;
  addressing::Method method = addressing::Method::I;

  // direct injections, bypassing the field pipeline (rad/s)
  std::optional<std::pair<double, double>> injected_rates;   // methods I/II
  std::optional<std::pair<double, double>> injected_sigma_z; // method III
  std::optional<double> injected_splitting;                  // method IV

  double global_rabi_rate = 0;        // rad/s, global and method-IV pulses
  double detection_error = 0;         // per-ion misidentification probability
  double preparation_error = 0;       // per-ion flip probability (sampled mode)
  double config_switch_duration = 80e-6; // s
  double phase_slip_per_switch = 0;   // rad, drive-phase slip per reconfiguration
};

struct StepRecord {
  int instruction_line = 0;
  double time = 0; // s, at the end of the step
  double p_down_q1 = 1;
  double p_down_q2 = 1;
  std::string note;
};

struct DetectionEvent {
  int instruction_line = 0;
  double time = 0;
  std::array<double, 3> bright_count_probability{}; // ideal-readout distribution
  std::optional<int> sampled_bright_count;          // sampled mode only
};

struct ExecutionTrace {
  std::vector<StepRecord> steps;
  std::vector<DetectionEvent> detections;
  std::array<spin::QubitState, 2> final_states;
  double total_time = 0;
};

namespace detail {

struct PulseResolution {
  std::array<double, 2> rate{};     // rad/s
  std::array<double, 2> detuning{}; // rad/s
  double duration = 0;              // s
  bool sigma_z = false;             // method III: pure phase accumulation
  std::array<double, 2> sigma_z_rate{};
};

inline std::array<double, 2> physical_rates(const ModelBundle& bundle,
                                            const trap::IonLayout& layout) {
  if (bundle.injected_rates)
    return {bundle.injected_rates->first, bundle.injected_rates->second};
  if (bundle.method == addressing::Method::I) {
    const auto r = addressing::method_I(bundle.bases, bundle.addressed_drive,
                                        layout, bundle.levels, bundle.axis,
                                        bundle.pair);
    return {r.rate_q1, r.rate_q2};
  }
  addressing::MicromotionOptions opts;
  opts.efficiency = bundle.micromotion_efficiency;
  const auto r = addressing::method_II(bundle.bases, bundle.addressed_drive,
                                       layout, bundle.levels, bundle.trap,
                                       bundle.axis, bundle.pair, opts);
  return {r.rate_q1, r.rate_q2};
}

inline std::array<double, 2> sigma_z_rates(const ModelBundle& bundle,
                                           const trap::IonLayout& layout,
                                           double detuning) {
  if (bundle.injected_sigma_z)
    return {bundle.injected_sigma_z->first, bundle.injected_sigma_z->second};
  const auto coeff = hyperfine::ac_zeeman_coefficients(
      bundle.levels, bundle.pair.down, bundle.pair.up, detuning);
  std::array<double, 2> shifts{};
  for (int ion = 0; ion < 2; ++ion) {
    const auto s = field::sample(bundle.bases, bundle.addressed_drive,
                                 bundle.axis, trap::radial_position(layout, ion));
    shifts[static_cast<size_t>(ion)] = addressing::acz_shift_of_sample(coeff, s);
  }
  return shifts;
}

inline double splitting(const ModelBundle& bundle, const trap::IonLayout& layout,
                        double detuning) {
  if (bundle.injected_splitting) return *bundle.injected_splitting;
  const auto s = sigma_z_rates(bundle, layout, detuning);
  return s[1] - s[0];
}

} // namespace detail

class Executor {
 public:
  Executor(const SequenceProgram& program, const ModelBundle& bundle,
           ExecutionMode mode, std::optional<uint64_t> seed_override = {})
      : program_(program), bundle_(bundle), mode_(mode),
        seed_(seed_override ? *seed_override : program.seed.value_or(0)) {}

  ExecutionTrace run() {
    state_ = {spin::QubitState::down(), spin::QubitState::down()};
    config_ = trap::Configuration::A;
    layout_ = trap::make_layout(bundle_.trap, config_, bundle_.ion2_offset,
                                bundle_.residual_floor);
    time_ = 0;
    phase_offset_ = 0;
    wait_detuning_ = {0, 0};
    draw_count_ = 0;
    measured_superposition_ = false;
    trace_ = ExecutionTrace{};
    execute_list(program_.instructions);
    trace_.final_states = state_;
    trace_.total_time = time_;
    return trace_;
  }

 private:
  void execute_list(const std::vector<Instruction>& list) {
    for (const auto& inst : list) {
      try {
        execute_one(inst);
      } catch (const ConfigError&) {
        throw;
      } catch (const ModelError& e) {
        throw ModelError("line " + std::to_string(inst.line) + ": " + e.what());
      }
      check_norms(inst.line);
    }
  }

  void execute_one(const Instruction& inst) {
    if (measured_superposition_ && !std::holds_alternative<Prepare>(inst.op))
      throw ModelError(
          "continuing after measuring a superposition requires sampled mode");
    if (const auto* p = std::get_if<Prepare>(&inst.op)) {
      measured_superposition_ = false;
      for (size_t ion = 0; ion < 2; ++ion) {
        bool up = p->up[ion];
        if (mode_ == ExecutionMode::sampled && bundle_.preparation_error > 0 &&
            uniform() < bundle_.preparation_error)
          up = !up;
        state_[ion] = up ? spin::QubitState::up() : spin::QubitState::down();
      }
      wait_detuning_ = {0, 0};
      record_step(inst.line, "prepare");
    } else if (const auto* c = std::get_if<SetConfig>(&inst.op)) {
      if (c->config == config_)
        throw ValidationError("switch to the current configuration", inst.line);
      config_ = c->config;
      layout_ = trap::make_layout(bundle_.trap, config_, bundle_.ion2_offset,
                                  bundle_.residual_floor);
      time_ += bundle_.config_switch_duration;
      phase_offset_ += bundle_.phase_slip_per_switch;
      record_step(inst.line, config_ == trap::Configuration::A ? "config A"
                                                               : "config B");
    } else if (const auto* pl = std::get_if<Pulse>(&inst.op)) {
      apply_pulse(*pl, inst.line);
    } else if (const auto* w = std::get_if<Wait>(&inst.op)) {
      const double t = units::us_to_s(w->duration_us);
      for (size_t ion = 0; ion < 2; ++ion)
        state_[ion] = spin::evolve(state_[ion], {0, 0, wait_detuning_[ion], t});
      time_ += t;
      record_step(inst.line, "wait");
    } else if (std::holds_alternative<Detect>(inst.op)) {
      detect(inst.line);
    } else if (const auto* b = std::get_if<Branch>(&inst.op)) {
      if (trace_.detections.empty())
        throw ValidationError("branch without a detection", inst.line);
      const auto& last = trace_.detections.back();
      int count;
      if (last.sampled_bright_count) {
        count = *last.sampled_bright_count;
      } else {
        count = -1;
        for (int k = 0; k < 3; ++k)
          if (last.bright_count_probability[static_cast<size_t>(k)] > 1 - 1e-9)
            count = k;
        if (count < 0)
          throw ModelError(
              "branching on an uncertain detection requires sampled mode");
      }
      if (count == b->bright_count) execute_list(b->body);
    }
  }

  void apply_pulse(const Pulse& p, int line) {
    const double extra_detuning = units::khz_to_angular(p.detuning_khz);
    const double phase = p.phase_rad + phase_offset_;

    std::array<double, 2> rate{}, detuning{extra_detuning, extra_detuning};
    bool sigma_z = false;
    std::array<double, 2> zrate{};
    double target_rate = 0;

    const bool addressed = p.target != Target::global;
    switch (bundle_.method) {
      case addressing::Method::I:
      case addressing::Method::II: {
        if (addressed) {
          if (config_ != trap::Configuration::B)
            throw ValidationError(
                "addressed pulses require configuration B", line);
          rate = detail::physical_rates(bundle_, layout_);
          target_rate = p.target == Target::q1 ? rate[0] : rate[1];
        } else {
          const double r = p.rate_khz ? units::khz_to_angular(*p.rate_khz)
                                      : bundle_.global_rabi_rate;
          rate = {r, r};
          target_rate = r;
        }
        break;
      }
      case addressing::Method::III: {
        if (!addressed) {
          // global carrier pulses stay ordinary rotations
          const double r = p.rate_khz ? units::khz_to_angular(*p.rate_khz)
                                      : bundle_.global_rabi_rate;
          rate = {r, r};
          target_rate = r;
          break;
        }
        sigma_z = true;
        zrate = detail::sigma_z_rates(bundle_, layout_,
                                      bundle_.addressed_drive.drive_frequency -
                                          addressing::qubit_frequency(
                                              bundle_.levels, bundle_.pair));
        target_rate = std::abs(p.target == Target::q1 ? zrate[0] : zrate[1]);
        break;
      }
      case addressing::Method::IV: {
        const double split = detail::splitting(
            bundle_, layout_,
            bundle_.addressed_drive.drive_frequency -
                addressing::qubit_frequency(bundle_.levels, bundle_.pair));
        const double r = p.rate_khz ? units::khz_to_angular(*p.rate_khz)
                                    : bundle_.global_rabi_rate;
        rate = {r, r};
        target_rate = r;
        // the drive is referenced to qubit 1; qubit 2 sits `split` above
        detuning = {extra_detuning, extra_detuning - split};
        if (p.target == Target::q2) {
          detuning = {extra_detuning + split, extra_detuning};
        }
        break;
      }
    }

    if (p.rate_khz && addressed)
      throw ValidationError("rate= applies only to global pulses", line);

    double duration;
    if (p.duration_us) {
      duration = units::us_to_s(*p.duration_us);
    } else {
      if (target_rate <= 0)
        throw ModelError("angle-specified pulse with zero Rabi rate on target");
      duration = *p.angle_rad / target_rate;
    }

    if (sigma_z) {
      for (size_t ion = 0; ion < 2; ++ion)
        state_[ion] = spin::apply_z_rotation(
            state_[ion], spin::acz_phase(zrate[ion], duration));
    } else {
      for (size_t ion = 0; ion < 2; ++ion) {
        state_[ion] = spin::evolve(
            state_[ion], {rate[ion], phase, detuning[ion], duration});
        wait_detuning_[ion] = detuning[ion];
      }
    }
    time_ += duration;
    record_step(line, std::string("pulse ") + target_name(p.target));
  }

  void detect(int line) {
    DetectionEvent event;
    event.instruction_line = line;
    event.time = time_;

    const double pd1 = state_[0].p_down();
    const double pd2 = state_[1].p_down();
    // bright <=> down under ideal readout; detection_error flips reports
    const double e = bundle_.detection_error;
    const double pb1 = pd1 * (1 - e) + (1 - pd1) * e;
    const double pb2 = pd2 * (1 - e) + (1 - pd2) * e;
    event.bright_count_probability = {(1 - pb1) * (1 - pb2),
                                      pb1 * (1 - pb2) + (1 - pb1) * pb2,
                                      pb1 * pb2};

    if (mode_ == ExecutionMode::sampled) {
      int count = 0;
      for (size_t ion = 0; ion < 2; ++ion) {
        const bool down = uniform() < state_[ion].p_down();
        state_[ion] = down ? spin::QubitState::down() : spin::QubitState::up();
        bool bright = down;
        if (e > 0 && uniform() < e) bright = !bright;
        count += bright ? 1 : 0;
      }
      event.sampled_bright_count = count;
    } else {
      // continuing past a measurement needs a definite outcome
      const bool basis1 = pd1 > 1 - 1e-9 || pd1 < 1e-9;
      const bool basis2 = pd2 > 1 - 1e-9 || pd2 < 1e-9;
      if (basis1 && basis2) {
        state_[0] = pd1 > 0.5 ? spin::QubitState::down() : spin::QubitState::up();
        state_[1] = pd2 > 0.5 ? spin::QubitState::down() : spin::QubitState::up();
      } else {
        measured_superposition_ = true;
      }
    }
    trace_.detections.push_back(event);
    record_step(line, "detect");
  }

  void record_step(int line, const std::string& note) {
    trace_.steps.push_back(
        {line, time_, state_[0].p_down(), state_[1].p_down(), note});
  }

  void check_norms(int line) {
    for (const auto& s : state_)
      if (std::abs(s.norm() - 1.0) > 1e-12)
        throw ModelError("line " + std::to_string(line) +
                         ": state norm drifted beyond tolerance");
  }

  double uniform() {
    rng::Substream stream(seed_, draw_count_++);
    return stream.uniform();
  }

  const SequenceProgram& program_;
  const ModelBundle& bundle_;
  ExecutionMode mode_;
  uint64_t seed_;

  std::array<spin::QubitState, 2> state_{};
  trap::Configuration config_ = trap::Configuration::A;
  trap::IonLayout layout_{};
  double time_ = 0;
  double phase_offset_ = 0;
  std::array<double, 2> wait_detuning_{};
  uint64_t draw_count_ = 0;
  bool measured_superposition_ = false;
  ExecutionTrace trace_;
};

inline ExecutionTrace execute(const SequenceProgram& program,
                              const ModelBundle& bundle, ExecutionMode mode,
                              std::optional<uint64_t> seed_override = {}) {
  Executor exec(program, bundle, mode, seed_override);
  return exec.run();
}

// ---------------------------------------------------------------------
// Conditional two-stage detection (interleaved pi pulse on qubit 2).
// ---------------------------------------------------------------------

struct DetectionRecord {
  int stage = 1;
  int bright_count = 0;
  std::array<std::string, 2> inferred{"pending", "pending"};
};

namespace detail {

inline void infer_stage1(DetectionRecord& rec) {
  if (rec.bright_count == 2) rec.inferred = {"down", "down"};
  else if (rec.bright_count == 0) rec.inferred = {"up", "up"};
}

} // namespace detail

// Deterministic protocol on (near-)basis states: reproduces the truth
// table exactly.  For superpositions use the sampled overload.
inline std::vector<DetectionRecord> conditional_detection(
    const std::array<spin::QubitState, 2>& state) {
  const double pd1 = state[0].p_down(), pd2 = state[1].p_down();
  if ((pd1 > 1e-9 && pd1 < 1 - 1e-9) || (pd2 > 1e-9 && pd2 < 1 - 1e-9))
    throw ModelError(
        "deterministic conditional detection requires basis states");
  const bool down1 = pd1 > 0.5;
  bool down2 = pd2 > 0.5;

  std::vector<DetectionRecord> records;
  DetectionRecord first;
  first.stage = 1;
  first.bright_count = (down1 ? 1 : 0) + (down2 ? 1 : 0);
  detail::infer_stage1(first);
  records.push_back(first);
  if (first.bright_count != 1) return records;

  down2 = !down2; // pi pulse on qubit 2
  DetectionRecord second;
  second.stage = 2;
  second.bright_count = (down1 ? 1 : 0) + (down2 ? 1 : 0);
  second.inferred = second.bright_count == 2
                        ? std::array<std::string, 2>{"down", "up"}
                        : std::array<std::string, 2>{"up", "down"};
  records.front().inferred = second.inferred;
  records.push_back(second);
  return records;
}

// Sampled protocol: Born-rule collapse per ion, optional readout error.
inline std::vector<DetectionRecord> conditional_detection(
    const std::array<spin::QubitState, 2>& state, rng::Substream& stream,
    double detection_error = 0) {
  auto read = [&](bool down) {
    bool bright = down;
    if (detection_error > 0 && stream.uniform() < detection_error)
      bright = !bright;
    return bright;
  };

  const bool down1 = stream.uniform() < state[0].p_down();
  bool down2 = stream.uniform() < state[1].p_down();

  std::vector<DetectionRecord> records;
  DetectionRecord first;
  first.stage = 1;
  first.bright_count = (read(down1) ? 1 : 0) + (read(down2) ? 1 : 0);
  detail::infer_stage1(first);
  records.push_back(first);
  if (first.bright_count != 1) return records;

  down2 = !down2;
  DetectionRecord second;
  second.stage = 2;
  second.bright_count = (read(down1) ? 1 : 0) + (read(down2) ? 1 : 0);
  if (second.bright_count == 2) second.inferred = {"down", "up"};
  else if (second.bright_count == 0) second.inferred = {"up", "down"};
  if (second.bright_count == 2 || second.bright_count == 0)
    records.front().inferred = second.inferred;
  records.push_back(second);
  return records;
}

} // namespace mwaddr::seq
