"""currencynet: deterministic simulation and analysis of egalitarian
multi-currency community networks."""

__version__ = "0.1.0"

from .ledger import (  # noqa: F401
    Coin,
    CurrencyCommunity,
    CurrencyNetwork,
    chain_pay,
    find_payment_path,
    holdings,
    network_from_dict,
    network_to_dict,
    pay,
    reverse,
)
from .accounting import History, HistoryStep, check_accounting_identity  # noqa: F401
from .economy import (  # noqa: F401
    ExchangeRateMatrix,
    PreferenceProfile,
    coin_exchange_rates,
    diluted_balances,
    fractional_equity,
    mrs_matrix,
    settle_trades,
    solve_equilibrium,
)
from .minting import (  # noqa: F401
    Defensive,
    Egocentric,
    EgalitarianSingle,
    EqualBirthGrant,
    FixedCurrency,
    JointEgalitarian,
    Myopic,
    UniformRandom,
    egocentric_choice,
    mint_step,
    most_valued_coin,
)
from .justice import (  # noqa: F401
    convergence_condition,
    convergence_report,
    justice_value_network,
    justice_value_single,
    predicted_mint_fraction,
)
from .identity import (  # noqa: F401
    OwnershipMap,
    classify,
    genuine_community,
    genuine_subnet,
    owner_equity,
    sybil_locality_report,
)
from .engine import (  # noqa: F401
    CommunityConfig,
    MrsSchedule,
    RatesConfig,
    RunResult,
    ScenarioConfig,
    load_scenario,
    run_scenario,
    validate_config,
)
