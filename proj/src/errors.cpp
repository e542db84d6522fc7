#include "dhlink/errors.hpp"

#include <utility>

namespace dhlink {

namespace {

constexpr std::pair<ErrorCode, const char*> kNames[] = {
    {ErrorCode::BadRequest, "bad-request"},
    {ErrorCode::IoError, "io-error"},
    {ErrorCode::MalformedEnvelope, "malformed-envelope"},
    {ErrorCode::NonEncodable, "non-encodable"},
    {ErrorCode::SchemaViolation, "schema-violation"},
    {ErrorCode::DuplicateName, "duplicate-name"},
    {ErrorCode::UnknownTopic, "unknown-topic"},
    {ErrorCode::UnknownSection, "unknown-section"},
    {ErrorCode::UnknownSchema, "unknown-schema"},
    {ErrorCode::TopicRetired, "topic-retired"},
    {ErrorCode::TopicNotReady, "topic-not-ready"},
    {ErrorCode::EnvelopeMismatch, "envelope-mismatch"},
    {ErrorCode::NotSectionOwner, "not-section-owner"},
    {ErrorCode::NotAdmin, "not-admin"},
    {ErrorCode::UnknownService, "unknown-service"},
    {ErrorCode::BadCredential, "bad-credential"},
    {ErrorCode::DuplicateEntry, "duplicate-entry"},
    {ErrorCode::UnknownEntry, "unknown-entry"},
    {ErrorCode::ActiveKeyExists, "active-key-exists"},
    {ErrorCode::NotFound, "not-found"},
    {ErrorCode::Deny, "deny"},
    {ErrorCode::DecryptFailure, "decrypt-failure"},
    {ErrorCode::UnknownName, "unknown-name"},
    {ErrorCode::IllegalTransition, "illegal-transition"},
    {ErrorCode::Unauthorized, "unauthorized"},
    {ErrorCode::KeyUnavailable, "key-unavailable"},
    {ErrorCode::BrokerUnreachable, "broker-unreachable"},
    {ErrorCode::DuplicateApp, "duplicate-app"},
    {ErrorCode::UnknownApp, "unknown-app"},
    {ErrorCode::MalformedProposal, "malformed-proposal"},
    {ErrorCode::WrongState, "wrong-state"},
    {ErrorCode::ConnectivityCheckFailed, "connectivity-check-failed"},
    {ErrorCode::NotConfirmed, "not-confirmed"},
    {ErrorCode::AdminLocked, "admin-locked"},
    {ErrorCode::MixedUserInput, "mixed-user-input"},
    {ErrorCode::UnknownConfirmedToken, "unknown-confirmed-token"},
    {ErrorCode::UnknownQuestionnaire, "unknown-questionnaire"},
    {ErrorCode::InvalidAnswer, "invalid-answer"},
    {ErrorCode::DuplicateUser, "duplicate-user"},
    {ErrorCode::InfeasiblePlant, "infeasible-plant"},
    {ErrorCode::SetupIncomplete, "setup-incomplete"},
    {ErrorCode::EndpointUnreachable, "endpoint-unreachable"},
};

}  // namespace

const char* error_code_name(ErrorCode code) {
  for (const auto& [c, name] : kNames)
    if (c == code) return name;
  return "internal-error";
}

ErrorCode error_code_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames)
    if (name == n) return c;
  return ErrorCode::BadRequest;
}

}  // namespace dhlink
