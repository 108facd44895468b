#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "mapmind/memory.hpp"
#include "mapmind/tasks.hpp"

namespace mapmind {

enum class Role : std::uint8_t { system, user, assistant };

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "?";
}

struct ChatMessage {
  Role role = Role::user;
  std::string text;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// ---------------------------------------------------------------------------
// Schemes
// ---------------------------------------------------------------------------

enum class SchemeKind : std::uint8_t { DT, CoT, SC_CoT, ToT };

inline std::string_view scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::DT: return "DT";
    case SchemeKind::CoT: return "CoT";
    case SchemeKind::SC_CoT: return "SC_CoT";
    case SchemeKind::ToT: return "ToT";
  }
  return "?";
}

struct Scheme {
  SchemeKind kind = SchemeKind::DT;
  int k = 5;
  double temperature = 1.0;
  int plans = 3;
  int candidates = 3;

  std::string name() const { return std::string(scheme_name(kind)); }
};

inline Scheme parse_scheme(std::string_view s) {
  for (auto k : {SchemeKind::DT, SchemeKind::CoT, SchemeKind::SC_CoT, SchemeKind::ToT})
    if (scheme_name(k) == s) return Scheme{k};
  if (s == "SC-CoT") return Scheme{SchemeKind::SC_CoT};
  throw error("unknown-scheme", std::string(s));
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

inline constexpr std::string_view system_preamble =
    "You explored a city laid out on a 20x20 grid. Columns grow to the east and rows grow to the south, so "
    "row 0 is the northern edge. Each move goes to one of the eight neighbouring cells and costs 1. Points of "
    "interest (P1, P2, ...) connect to the road network through their nearest road cell; intersections are "
    "named I1, I2, .... Offsets are written (column change, row change). Use only your memory of the "
    "exploration to answer the multiple-choice question. Finish your reply with a line of the form "
    "\"Answer: <letter>\".";

inline constexpr std::string_view cot_suffix = "Let's think step by step.";

inline std::string memory_block(const MemoryBundle& bundle) {
  return "Your memory of the exploration:\n" + bundle.serialized;
}

inline std::vector<ChatMessage> build_task_prompt(const MemoryBundle& bundle, const TaskItem& task,
                                                  const Scheme& scheme) {
  if (task.meta.degenerate) throw error("degenerate-task", task.id + " has no unique answer");
  std::string user = memory_block(bundle) + "\nQuestion:\n" + task.prompt();
  if (scheme.kind == SchemeKind::CoT || scheme.kind == SchemeKind::SC_CoT) user += cot_suffix;
  return {{Role::system, std::string(system_preamble)}, {Role::user, user}};
}

inline std::vector<ChatMessage> build_plan_prompt(const MemoryBundle& bundle, const TaskItem& task, int plans) {
  auto messages = build_task_prompt(bundle, task, Scheme{SchemeKind::DT});
  messages[1].text += "Do not answer yet. Propose " + std::to_string(plans) +
                      " different reasoning plans for this question, one per line, written as \"Plan 1: ...\" "
                      "through \"Plan " +
                      std::to_string(plans) +
                      ": ...\". Then pick the most promising plan and end with \"Selected plan: <number>\".";
  return messages;
}

inline std::vector<ChatMessage> build_candidate_prompt(const MemoryBundle& bundle, const TaskItem& task,
                                                       const std::string& plan, int candidates) {
  auto messages = build_task_prompt(bundle, task, Scheme{SchemeKind::DT});
  messages[1].text += "Follow this reasoning plan: " + plan + "\nPropose " + std::to_string(candidates) +
                      " candidate answers, one per line, written as \"Candidate 1: ...\" with a short "
                      "justification each. Then select the best candidate and end with \"Answer: <letter>\".";
  return messages;
}

// ---------------------------------------------------------------------------
// Answer extraction
// ---------------------------------------------------------------------------

inline std::optional<int> extract_choice(const std::string& reply) {
  static const std::regex tagged(R"(answer\s*:\s*\**\s*\(?([abcd])\b)", std::regex::icase);
  std::optional<int> found;
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), tagged); it != std::sregex_iterator(); ++it)
    found = std::toupper(static_cast<unsigned char>((*it)[1].str()[0])) - 'A';
  if (found) return found;
  static const std::regex bare(R"((^|[^A-Za-z0-9])([ABCD])(?=$|[^A-Za-z0-9]))");
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), bare); it != std::sregex_iterator(); ++it)
    found = (*it)[2].str()[0] - 'A';
  return found;
}

// ---------------------------------------------------------------------------
// Endpoints
// ---------------------------------------------------------------------------

enum class EndpointKind : std::uint8_t { scripted_oracle, scripted_random, remote_chat };

inline std::string_view endpoint_kind_name(EndpointKind k) {
  switch (k) {
    case EndpointKind::scripted_oracle: return "scripted-oracle";
    case EndpointKind::scripted_random: return "scripted-random";
    case EndpointKind::remote_chat: return "remote-chat";
  }
  return "?";
}

inline EndpointKind parse_endpoint_kind(std::string_view s) {
  for (auto k : {EndpointKind::scripted_oracle, EndpointKind::scripted_random, EndpointKind::remote_chat})
    if (endpoint_kind_name(k) == s) return k;
  throw error("unknown-endpoint-kind", std::string(s));
}

struct EndpointSpec {
  std::string name;
  EndpointKind kind = EndpointKind::scripted_oracle;
  std::string model;
  std::string base_url;
  double temperature = 0.0;
  int max_attempts = 3;
  int backoff_ms = 500;
  double requests_per_second = 0;  // 0 disables rate limiting
  int max_in_flight = 4;
  int timeout_s = 120;
  std::uint64_t seed = 0;

  void check() const {
    if (temperature < 0 || temperature > 2) throw error("bad-endpoint", name + ": temperature outside [0, 2]");
    if (max_attempts < 1) throw error("bad-endpoint", name + ": max_attempts must be at least 1");
    if (kind == EndpointKind::remote_chat && base_url.empty()) throw error("bad-endpoint", name + ": base_url missing");
  }
};

enum class Stage : std::uint8_t { answer, plan, candidates };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::answer: return "answer";
    case Stage::plan: return "plan";
    case Stage::candidates: return "candidates";
  }
  return "?";
}

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  // Stable identity of this call (cell, item, sample); seeds scripted agents.
  std::string key;
  Stage stage = Stage::answer;
  // Correct option, visible only to the scripted oracle.
  std::optional<int> hint;
  int plans = 3;
  int candidates = 3;
};

struct Completion {
  std::string text;
  double latency_ms = 0;
  int attempts = 1;
  std::optional<std::string> failure;

  Completion() = default;
  explicit Completion(std::string t) : text(std::move(t)) {}
};

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual Completion complete(const ChatRequest& request) = 0;
  virtual const EndpointSpec& spec() const = 0;
};

namespace detail {

inline std::string scripted_reply(const ChatRequest& req, char letter) {
  const std::string answer = std::string("Answer: ") + letter;
  switch (req.stage) {
    case Stage::plan: {
      std::string out;
      for (int i = 1; i <= req.plans; ++i) out += "Plan " + std::to_string(i) + ": consult the memory for option " + letter + ".\n";
      return out + "Selected plan: 1";
    }
    case Stage::candidates: {
      std::string out;
      for (int i = 1; i <= req.candidates; ++i) out += "Candidate " + std::to_string(i) + ": " + answer + "\n";
      return out + answer;
    }
    case Stage::answer: break;
  }
  return answer;
}

}  // namespace detail

// Always replies with the hinted correct letter.
class OracleEndpoint : public Endpoint {
 public:
  explicit OracleEndpoint(EndpointSpec spec) : spec_(std::move(spec)) {}
  Completion complete(const ChatRequest& req) override {
    if (!req.hint) return Completion{"I cannot tell."};
    return Completion{detail::scripted_reply(req, option_letter(static_cast<std::size_t>(*req.hint)))};
  }
  const EndpointSpec& spec() const override { return spec_; }

 private:
  EndpointSpec spec_;
};

// Uniform letter per request key, so replies do not depend on call order.
class RandomEndpoint : public Endpoint {
 public:
  explicit RandomEndpoint(EndpointSpec spec) : spec_(std::move(spec)) {}
  Completion complete(const ChatRequest& req) override {
    Rng rng(derive_seed(spec_.seed, req.key + "#" + std::string(stage_name(req.stage))));
    return Completion{detail::scripted_reply(req, option_letter(rng.uniform_index(4)))};
  }
  const EndpointSpec& spec() const override { return spec_; }

 private:
  EndpointSpec spec_;
};

// ---------------------------------------------------------------------------
// Scheme execution
// ---------------------------------------------------------------------------

struct CallRecord {
  Stage stage = Stage::answer;
  int sample = 0;
  std::string reply;
  std::optional<int> choice;
  double latency_ms = 0;
  int attempts = 1;
  std::optional<std::string> failure;
};

struct SchemeOutcome {
  std::optional<int> answer;
  std::vector<CallRecord> calls;
  // ToT only.
  std::vector<std::string> plans;
  int chosen_plan = 0;
  bool plan_fallback = false;
  std::vector<std::string> candidates;
};

struct CallContext {
  std::string key;
  std::optional<int> hint;
};

inline CallRecord call_endpoint(Endpoint& ep, ChatRequest req, int sample) {
  const Completion c = ep.complete(req);
  CallRecord rec{req.stage, sample, c.text, std::nullopt, c.latency_ms, c.attempts, c.failure};
  if (!c.failure) rec.choice = extract_choice(c.text);
  return rec;
}

inline SchemeOutcome run_single(Endpoint& ep, const std::vector<ChatMessage>& messages, double temperature,
                                const CallContext& ctx = {}) {
  SchemeOutcome out;
  out.calls.push_back(call_endpoint(ep, ChatRequest{messages, temperature, ctx.key, Stage::answer, ctx.hint}, 0));
  out.answer = out.calls.back().choice;
  return out;
}

// Majority over valid answers; ties go to the option sampled first.
inline std::optional<int> majority_vote(const std::vector<std::optional<int>>& votes) {
  std::map<int, int> count, first;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (!votes[i]) continue;
    ++count[*votes[i]];
    first.try_emplace(*votes[i], static_cast<int>(i));
  }
  std::optional<int> best;
  for (const auto& [option, n] : count)
    if (!best || n > count[*best] || (n == count[*best] && first[option] < first[*best])) best = option;
  return best;
}

inline SchemeOutcome run_self_consistency(Endpoint& ep, const std::vector<ChatMessage>& messages, int k,
                                          double temperature, const CallContext& ctx = {}) {
  if (k < 1) throw error("bad-scheme", "self-consistency needs k >= 1");
  SchemeOutcome out;
  std::vector<std::optional<int>> votes;
  for (int i = 0; i < k; ++i) {
    ChatRequest req{messages, temperature, ctx.key + "/s" + std::to_string(i), Stage::answer, ctx.hint};
    out.calls.push_back(call_endpoint(ep, std::move(req), i));
    votes.push_back(out.calls.back().choice);
  }
  out.answer = majority_vote(votes);
  return out;
}

namespace detail {

// Lines of the form "<label> <n>: text", in order of appearance.
inline std::vector<std::string> numbered_lines(const std::string& text, const std::string& label) {
  const std::regex line("^\\s*\\**" + label + "\\s*(\\d+)\\s*\\**\\s*[:.]\\s*(.*)$", std::regex::icase);
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string s; std::getline(in, s);) {
    std::smatch m;
    if (std::regex_match(s, m, line)) out.push_back(m[2].str());
  }
  return out;
}

inline std::optional<int> selected_plan(const std::string& text) {
  static const std::regex sel(R"(selected\s+plan\s*:\s*\**\s*(\d+))", std::regex::icase);
  std::optional<int> found;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), sel); it != std::sregex_iterator(); ++it)
    found = std::stoi((*it)[1].str());
  return found;
}

}  // namespace detail

inline SchemeOutcome run_tot(Endpoint& ep, const MemoryBundle& bundle, const TaskItem& task, int plans,
                             int candidates, double temperature, const CallContext& ctx = {}) {
  if (plans < 1 || candidates < 1) throw error("bad-scheme", "tree of thoughts needs plans, candidates >= 1");
  SchemeOutcome out;
  ChatRequest first{build_plan_prompt(bundle, task, plans), temperature, ctx.key, Stage::plan, ctx.hint, plans,
                    candidates};
  out.calls.push_back(call_endpoint(ep, std::move(first), 0));
  const std::string& plan_text = out.calls.back().reply;
  out.plans = detail::numbered_lines(plan_text, "plan");
  const auto sel = detail::selected_plan(plan_text);
  if (sel && *sel >= 1 && *sel <= static_cast<int>(out.plans.size())) {
    out.chosen_plan = *sel;
  } else {
    out.chosen_plan = 1;
    out.plan_fallback = true;
  }
  const std::string plan =
      out.plans.empty() ? std::string("Reason directly from the memory.")
                        : out.plans[static_cast<std::size_t>(out.chosen_plan) - 1];
  ChatRequest second{build_candidate_prompt(bundle, task, plan, candidates), temperature, ctx.key, Stage::candidates,
                     ctx.hint, plans, candidates};
  out.calls.push_back(call_endpoint(ep, std::move(second), 1));
  out.candidates = detail::numbered_lines(out.calls.back().reply, "candidate");
  out.answer = out.calls.back().choice;
  return out;
}

inline SchemeOutcome run_scheme(Endpoint& ep, const MemoryBundle& bundle, const TaskItem& task, const Scheme& scheme,
                                const CallContext& ctx = {}) {
  switch (scheme.kind) {
    case SchemeKind::DT:
    case SchemeKind::CoT:
      return run_single(ep, build_task_prompt(bundle, task, scheme), ep.spec().temperature, ctx);
    case SchemeKind::SC_CoT:
      return run_self_consistency(ep, build_task_prompt(bundle, task, scheme), scheme.k, scheme.temperature, ctx);
    case SchemeKind::ToT:
      if (task.meta.degenerate) throw error("degenerate-task", task.id + " has no unique answer");
      return run_tot(ep, bundle, task, scheme.plans, scheme.candidates, ep.spec().temperature, ctx);
  }
  return {};
}

inline ojson call_record_to_json(const CallRecord& r) {
  ojson j{{"stage", std::string(stage_name(r.stage))}, {"sample", r.sample}, {"reply", r.reply}};
  j["choice"] = r.choice ? ojson(std::string(1, option_letter(static_cast<std::size_t>(*r.choice)))) : ojson(nullptr);
  j["latency_ms"] = r.latency_ms;
  j["attempts"] = r.attempts;
  if (r.failure) j["failure"] = *r.failure;
  return j;
}

}  // namespace mapmind
