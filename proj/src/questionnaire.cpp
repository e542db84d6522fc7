#include "dhlink/questionnaire.hpp"

#include <algorithm>
#include <set>

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

std::string question_kind_name(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::SingleChoice:
      return "single-choice";
    case QuestionKind::MultiChoice:
      return "multi-choice";
    case QuestionKind::NumericScale:
      return "numeric-scale";
    case QuestionKind::FreeText:
      return "free-text";
  }
  return "free-text";
}

QuestionKind question_kind_from_name(const std::string& name) {
  if (name == "single-choice") return QuestionKind::SingleChoice;
  if (name == "multi-choice") return QuestionKind::MultiChoice;
  if (name == "numeric-scale") return QuestionKind::NumericScale;
  if (name == "free-text") return QuestionKind::FreeText;
  fail(ErrorCode::BadRequest, "unknown question kind: " + name);
}

void to_json(Json& j, const Question& q) {
  j = Json{{"qid", q.qid}, {"text", q.text},
           {"kind", question_kind_name(q.kind)}};
  if (q.kind == QuestionKind::SingleChoice ||
      q.kind == QuestionKind::MultiChoice) {
    j["options"] = q.options;
  }
  if (q.kind == QuestionKind::NumericScale) {
    j["min"] = q.min;
    j["max"] = q.max;
  }
}

void from_json(const Json& j, Question& q) {
  j.at("qid").get_to(q.qid);
  j.at("text").get_to(q.text);
  q.kind = question_kind_from_name(j.at("kind").get<std::string>());
  q.options.clear();
  if (q.kind == QuestionKind::SingleChoice ||
      q.kind == QuestionKind::MultiChoice) {
    j.at("options").get_to(q.options);
  }
  if (q.kind == QuestionKind::NumericScale) {
    j.at("min").get_to(q.min);
    j.at("max").get_to(q.max);
  }
}

void to_json(Json& j, const QuestionnaireDef& d) {
  j = Json{{"questionnaireId", d.questionnaire_id},
           {"title", d.title},
           {"questions", d.questions}};
}

void from_json(const Json& j, QuestionnaireDef& d) {
  j.at("questionnaireId").get_to(d.questionnaire_id);
  j.at("title").get_to(d.title);
  j.at("questions").get_to(d.questions);
}

void to_json(Json& j, const QuestionnaireResponse& r) {
  Json answers = Json::array();
  for (const auto& a : r.answers) {
    answers.push_back(Json{{"qid", a.qid}, {"value", a.value}});
  }
  j = Json{{"userToken", r.user_token},
           {"questionnaireId", r.questionnaire_id},
           {"submittedAt", r.submitted_at},
           {"answers", answers}};
}

void from_json(const Json& j, QuestionnaireResponse& r) {
  j.at("userToken").get_to(r.user_token);
  j.at("questionnaireId").get_to(r.questionnaire_id);
  j.at("submittedAt").get_to(r.submitted_at);
  r.answers.clear();
  for (const auto& a : j.at("answers")) {
    r.answers.push_back(Answer{a.at("qid").get<std::string>(),
                               a.at("value")});
  }
}

namespace {

[[noreturn]] void bad_answer(const std::string& qid, const std::string& why) {
  fail(ErrorCode::InvalidAnswer, "answer for '" + qid + "' " + why);
}

void check_answer(const Question& q, const Json& value) {
  switch (q.kind) {
    case QuestionKind::SingleChoice: {
      if (!value.is_string()) bad_answer(q.qid, "must be one option string");
      auto chosen = value.get<std::string>();
      if (std::find(q.options.begin(), q.options.end(), chosen) ==
          q.options.end()) {
        bad_answer(q.qid, "names an option that is not offered");
      }
      break;
    }
    case QuestionKind::MultiChoice: {
      if (!value.is_array()) bad_answer(q.qid, "must be an option array");
      std::set<std::string> picked;
      for (const auto& item : value) {
        if (!item.is_string()) bad_answer(q.qid, "must hold option strings");
        auto chosen = item.get<std::string>();
        if (std::find(q.options.begin(), q.options.end(), chosen) ==
            q.options.end()) {
          bad_answer(q.qid, "names an option that is not offered");
        }
        if (!picked.insert(chosen).second) {
          bad_answer(q.qid, "repeats an option");
        }
      }
      break;
    }
    case QuestionKind::NumericScale: {
      if (!value.is_number_integer()) {
        bad_answer(q.qid, "must be an integer");
      }
      int64_t v = value.get<int64_t>();
      if (v < q.min || v > q.max) {
        bad_answer(q.qid, "is outside [" + std::to_string(q.min) + ", " +
                              std::to_string(q.max) + "]");
      }
      break;
    }
    case QuestionKind::FreeText:
      if (!value.is_string()) bad_answer(q.qid, "must be text");
      break;
  }
}

void check_definition(const QuestionnaireDef& def) {
  if (!util::is_valid_identifier(def.questionnaire_id)) {
    fail(ErrorCode::BadRequest, "bad questionnaire id");
  }
  std::set<std::string> qids;
  for (const auto& q : def.questions) {
    if (q.qid.empty()) fail(ErrorCode::BadRequest, "question without qid");
    if (!qids.insert(q.qid).second) {
      fail(ErrorCode::BadRequest, "duplicate qid '" + q.qid + "'");
    }
    if (q.kind == QuestionKind::SingleChoice ||
        q.kind == QuestionKind::MultiChoice) {
      if (q.options.empty()) {
        fail(ErrorCode::BadRequest, "choice question '" + q.qid +
                                        "' offers no options");
      }
      std::set<std::string> unique(q.options.begin(), q.options.end());
      if (unique.size() != q.options.size()) {
        fail(ErrorCode::BadRequest,
             "choice question '" + q.qid + "' repeats an option");
      }
    }
    if (q.kind == QuestionKind::NumericScale && q.min > q.max) {
      fail(ErrorCode::BadRequest,
           "numeric question '" + q.qid + "' has min above max");
    }
  }
}

}  // namespace

void validate_response(const QuestionnaireDef& def,
                       const QuestionnaireResponse& response) {
  std::map<std::string, const Question*> by_qid;
  for (const auto& q : def.questions) by_qid[q.qid] = &q;
  std::set<std::string> answered;
  for (const auto& answer : response.answers) {
    auto it = by_qid.find(answer.qid);
    if (it == by_qid.end()) {
      bad_answer(answer.qid, "matches no question in " +
                                 def.questionnaire_id);
    }
    if (!answered.insert(answer.qid).second) {
      bad_answer(answer.qid, "appears twice");
    }
    check_answer(*it->second, answer.value);
  }
}

QuestionnaireService::QuestionnaireService(Store* store) : store_(store) {
  for (const auto& [key, value] : store_->list("questionnaires/")) {
    QuestionnaireDef def = value.get<QuestionnaireDef>();
    defs_[def.questionnaire_id] = std::move(def);
  }
}

void QuestionnaireService::register_definition(const QuestionnaireDef& def) {
  check_definition(def);
  if (defs_.count(def.questionnaire_id)) {
    fail(ErrorCode::DuplicateName,
         "questionnaire " + def.questionnaire_id + " already registered");
  }
  store_->put("questionnaires/" + def.questionnaire_id, Json(def));
  defs_[def.questionnaire_id] = def;
}

int QuestionnaireService::load_definitions_dir(const std::string& dir) {
  int loaded = 0;
  std::vector<std::string> names = util::list_dir(dir);
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    if (name.size() < 5 || name.substr(name.size() - 5) != ".json") continue;
    Json doc = Json::parse(util::read_file(dir + "/" + name), nullptr, false);
    if (doc.is_discarded()) {
      fail(ErrorCode::BadRequest, dir + "/" + name + " is not JSON");
    }
    QuestionnaireDef def = doc.get<QuestionnaireDef>();
    if (defs_.count(def.questionnaire_id)) continue;
    register_definition(def);
    ++loaded;
  }
  return loaded;
}

const QuestionnaireDef& QuestionnaireService::definition(
    const std::string& questionnaire_id) const {
  auto it = defs_.find(questionnaire_id);
  if (it == defs_.end()) {
    fail(ErrorCode::UnknownQuestionnaire,
         "questionnaire " + questionnaire_id + " is not registered");
  }
  return it->second;
}

std::vector<std::string> QuestionnaireService::questionnaire_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, def] : defs_) out.push_back(id);
  return out;
}

std::string QuestionnaireService::submit_response(
    const QuestionnaireResponse& response) {
  const QuestionnaireDef& def = definition(response.questionnaire_id);
  if (response.user_token.empty()) {
    fail(ErrorCode::BadRequest, "response without user token");
  }
  validate_response(def, response);
  std::string key = "responses/" + response.user_token + "/" +
                    response.questionnaire_id + "/" +
                    std::to_string(response.submitted_at);
  store_->put(key, Json(response));
  return key;
}

std::vector<QuestionnaireResponse> QuestionnaireService::responses_for(
    const std::string& user_token) const {
  std::vector<QuestionnaireResponse> out;
  for (const auto& [key, value] : store_->list("responses/" + user_token +
                                               "/")) {
    out.push_back(value.get<QuestionnaireResponse>());
  }
  return out;
}

}  // namespace dhlink
