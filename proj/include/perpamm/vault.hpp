#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "perpamm/money.hpp"

namespace perpamm {

using Shares = std::int64_t;

// Auto-compounding LP vault. Fees and trader losses are credited to assets,
// trader profits are debited; the share count only moves on deposit/redeem,
// so the share price carries the compounding.
class Vault {
public:
    // Mints floor(assets * total_shares / total_assets) shares, or one share per
    // base unit into an empty vault. Zero-share mints are rejected.
    Shares deposit(const std::string& account, Money assets);

    // Burns `shares` for floor(shares * total_assets / total_shares).
    Money redeem(const std::string& account, Shares shares);

    // Preview of redeem without mutating.
    Money preview_redeem(Shares shares) const;

    void credit(Money amount);
    void debit(Money amount);

    Money total_assets() const { return total_assets_; }
    Shares total_shares() const { return total_shares_; }
    Shares balance(const std::string& account) const;
    const std::map<std::string, Shares>& balances() const { return balances_; }

    // total_assets / total_shares in assets per share (1.0 when empty).
    double share_price() const;

    friend bool operator==(const Vault&, const Vault&) = default;

private:
    Money total_assets_;
    Shares total_shares_ = 0;
    std::map<std::string, Shares> balances_;
};

}  // namespace perpamm
